"""Command line: `latticebv verify ...` and `latticebv explain <id>`.

Exit codes: 0 all checks pass, 1 some check fails, 2 bad configuration,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .config import SUITE_NAMES, ConfigError, load_config, parse_config
from .report import CheckResult, dumps, to_jsonable
from .suites import CATALOG, checks_for, run_check

GOLDEN_DIR = Path(__file__).parent / "goldens"


def _build_config(args):
    if args.config:
        cfg = load_config(args.config)
        raw = dict(cfg.raw)
    else:
        raw = {"model": args.model or "M2"}
    if args.model and args.config:
        raw["model"] = args.model
    caps = dict(raw.get("caps", {}))
    if args.order is not None:
        caps["K"] = args.order
    if args.lambda_order is not None:
        caps["K_lam"] = caps["K_mu"] = args.lambda_order
    raw["caps"] = caps
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.trials is not None:
        raw["trials"] = args.trials
    if args.suite:
        raw["suites"] = [s for item in args.suite for s in item.split(",") if s]
    return parse_config(raw, raw.get("name", "cli"))


def _golden(cid: str, r: CheckResult, gdir: Path, update: bool):
    """Compare extra["golden"] with the frozen file; write it when updating."""
    if "golden" not in r.extra:
        return
    value = to_jsonable(r.extra.pop("golden"))
    path = gdir / f"{cid}.json"
    if update:
        gdir.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(value, indent=2, sort_keys=True) + "\n")
        r.extra["golden"] = "written"
        return
    if not path.exists():
        r.extra["golden"] = "missing"
        return
    frozen = json.loads(path.read_text())
    if frozen == value:
        r.extra["golden"] = "match"
    else:
        r.status = "fail"
        r.extra["golden"] = {"expected": frozen, "got": value}


def _run_one(job):
    cfg, cid = job
    t = time.perf_counter()
    try:
        r = run_check(cfg, cid)
    except ConfigError:
        raise
    except ValueError as e:
        r = CheckResult(cid, "error", extra={"error": f"{type(e).__name__}: {e}"})
    return r, time.perf_counter() - t


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("LATTICEBV_WORKERS", "1")))
    except ValueError:
        raise ConfigError("LATTICEBV_WORKERS must be an integer")


def run_suites(cfg, only=None, golden_dir=GOLDEN_DIR, update=False, timings=False) -> dict:
    ids = checks_for(cfg.selected())
    if only:
        unknown = [c for c in only if c not in CATALOG]
        if unknown:
            raise ConfigError(f"unknown check id(s): {', '.join(unknown)}")
        ids = [c for c in ids if c in only]
    jobs = [(cfg, cid) for cid in ids]
    n = _workers()
    if n > 1 and len(jobs) > 1:
        import multiprocessing as mp
        with ProcessPoolExecutor(n, mp_context=mp.get_context("fork")) as ex:
            results = list(ex.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    checks = []
    for cid, (r, dt) in zip(ids, results):
        _golden(cid, r, Path(golden_dir), update)
        e = CATALOG[cid]
        rec = {"id": cid, "suite": e.suite, "anchor": e.anchor, **r.to_json()}
        rec.pop("check")
        if timings:
            rec["seconds"] = round(dt, 3)
        checks.append(rec)
    status = [c["status"] for c in checks]
    return {
        "config": {"name": cfg.name, "model": cfg.model.name or "custom", "seed": cfg.seed,
                   "caps": {"K": cfg.K, "K_lam": cfg.K_lam, "K_mu": cfg.K_mu}, "trials": cfg.trials,
                   "suites": list(cfg.selected())},
        "summary": {"total": len(checks), "passed": status.count("pass"), "failed": status.count("fail"),
                    "errors": status.count("error")},
        "checks": checks,
    }


def float_demo(a: float = 0.25, c="1/3", beta="1/2", gamma="2", cap: int = 20) -> dict:
    """The exact lam-series of zeta_{exp(lam X)}(F) - F summed at lam = a, against a closed form.

    One site, Z = 1 + c d^2, X the dilation, F = beta phi^2 + gamma phi:
    zeta(F) - F = i a + c (1 + 2 beta)(e^{2a} - 1).
    """
    from .cocycle import integrate_zeta
    from .config import model_from_json
    from .deform import twist
    from .galg import GradedPoly, _q, field
    from .rg import RenMap
    from .sym import LieSymmetry

    cq, bq, gq = _q(c), _q(beta), _q(gamma)
    ctx = twist(model_from_json("M1"), RenMap.single(2, 0, (0, 0), cq))
    p = GradedPoly.var(field(0))
    F = (p * p).scale(bq) + p.scale(gq)
    series = integrate_zeta(ctx, LieSymmetry(1, {0: [[1]]}), cap).apply(F) - F
    re = im = 0.0
    for key, coeff in series.items():
        k = dict(zip(series.params, key)).get("lam", 0)
        if not coeff.is_constant():
            raise RuntimeError("zeta(F) - F should be field independent here")
        s = coeff.constant_term()
        re += float(s.re) * a ** k
        im += float(s.im) * a ** k
    closed_re = float(cq) * (1 + 2 * float(bq)) * math.expm1(2 * a)
    err = math.hypot(re - closed_re, im - a)
    return {"a": a, "cap": cap, "series": [re, im], "closed_form": [closed_re, a], "abs_error": err,
            "status": "pass" if err < 1e-9 else "fail"}


def _explain(args) -> int:
    if args.list or not args.id:
        for cid, e in CATALOG.items():
            print(f"{cid:30s} {e.anchor:24s} {e.name}")
        return 0
    e = CATALOG.get(args.id)
    if e is None:
        close = [c for c in CATALOG if args.id in c]
        print(f"unknown check id {args.id!r}" + (f"; did you mean {', '.join(close)}?" if close else ""),
              file=sys.stderr)
        return 2
    print(f"{e.id}  [{e.suite}]")
    print(f"anchor:    {e.anchor}")
    print(f"name:      {e.name}")
    print(f"statement: {e.statement}")
    return 0


def _verify(args) -> int:
    cfg = _build_config(args)
    only = [c for item in (args.check or []) for c in item.split(",") if c]
    gdir = Path(args.golden_dir) if args.golden_dir else GOLDEN_DIR
    report = run_suites(cfg, only, gdir, args.update_goldens, args.timings)
    if args.float_demo:
        report["float_demo"] = float_demo()
    text = dumps(report)
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)
    s = report["summary"]
    print(f"{s['passed']}/{s['total']} checks passed", file=sys.stderr)
    bad = s["failed"] + s["errors"]
    if args.float_demo and report["float_demo"]["status"] != "pass":
        bad += 1
    return 0 if bad == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="latticebv", description="Exact checks of BV anomaly identities on finite lattices.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)
    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--config", help="JSON suite configuration")
    v.add_argument("--suite", action="append", help=f"suite name(s): all, {', '.join(SUITE_NAMES)}")
    v.add_argument("--check", action="append", help="restrict to these check ids")
    v.add_argument("--model", help="model JSON file, shipped model (m1.json, m2.json, p2.json, g1.json, g3.json) or preset name")
    v.add_argument("--order", type=int, help="eps cap K")
    v.add_argument("--lambda-order", type=int, help="lam and mu caps")
    v.add_argument("--seed", type=int)
    v.add_argument("--trials", type=int, help="random trials per check")
    v.add_argument("--report", help="write the JSON report here instead of stdout")
    v.add_argument("--float-demo", action="store_true", help="add the floating-point cocycle demo")
    v.add_argument("--timings", action="store_true", help="record wall time per check (report is then not reproducible)")
    v.add_argument("--golden-dir", help="directory of frozen values")
    v.add_argument("--update-goldens", action="store_true", help="rewrite frozen values instead of comparing")
    e = sub.add_parser("explain", help="describe a check")
    e.add_argument("id", nargs="?")
    e.add_argument("--list", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _explain(args) if args.cmd == "explain" else _verify(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
