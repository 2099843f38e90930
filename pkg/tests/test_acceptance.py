"""One test per acceptance criterion; each records a PASS/FAIL line with its wall time."""

import subprocess
import sys
import time

import pytest

from conftest import ACCEPTANCE_LINES
from latticebv.config import parse_config
from latticebv.suites import run_check

M2 = parse_config({"model": "M2", "seed": 0, "trials": 20, "caps": {"K": 3, "K_lam": 3, "K_mu": 3}})


def _criterion(n, title, limit, body):
    t = time.perf_counter()
    try:
        ok, detail = body()
    except Exception as e:  # record, then re-raise below
        ok, detail = False, f"{type(e).__name__}: {e}"
    dt = time.perf_counter() - t
    ok_time = dt < limit
    status = "PASS" if ok and ok_time else "FAIL"
    line = f"{status} criterion {n}: {title} ({dt:.1f}s, limit {limit}s){'' if ok else ' ' + detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, detail
    assert ok_time, f"took {dt:.1f}s, limit {limit}s"


def _all(cfg, ids, need=None):
    bad = []
    results = {}
    for cid in ids:
        r = run_check(cfg, cid)
        results[cid] = r
        if not r.ok:
            bad.append(cid)
        if need and r.extra.get("trials", 0) < need.get(cid, 0):
            bad.append(f"{cid} ran only {r.extra.get('trials')} trials")
    return not bad, ("failed: " + ", ".join(bad)) if bad else "", results


def test_1_algebra_axioms():
    def body():
        ok, d, _ = _all(M2, ["galg.gmul", "galg.leibniz", "galg.derivations", "galg.antibracket"],
                        {"galg.gmul": 100, "galg.leibniz": 100, "galg.antibracket": 100})
        return ok, d
    _criterion(1, "graded algebra and antibracket axioms on M2", 10, body)


def test_2_deformation_layer():
    def body():
        ok, d, _ = _all(M2, ["deform.T_inverse", "deform.field_independence", "deform.field_equation"])
        return ok, d
    _criterion(2, "T round trip, field independence, off-shell field equation", 10, body)


def test_3_bv_nilpotency():
    cfg = parse_config({"model": "M2", "trials": 20, "caps": {"K": 4}})

    def body():
        ok, d, _ = _all(cfg, ["bv.nilpotency"])
        return ok, d
    _criterion(3, "s_F, s-hat_0, s-hat_F and lap square to zero through K = 4", 30, body)


def test_4_anomaly_cross_oracle():
    def body():
        ok, d, _ = _all(M2, ["bv.anomaly_routes"], {"bv.anomaly_routes": 20})
        return ok, d
    _criterion(4, "Ward-identity anomaly equals i lap_F d_X on M1/M2, both contexts", 60, body)


def test_5_wess_zumino():
    p2 = parse_config({"model": "P2", "trials": 3})

    def body():
        ok, d, res = _all(M2, ["wz.extended", "wz.lie"], {"wz.extended": 20, "wz.lie": 20})
        terms = set(res["wz.extended"].extra.get("nonzero_terms", []))
        if not {"t1", "t2", "t3", "t4", "t5", "t6"} <= terms:
            ok, d = False, f"some terms never nonzero: {sorted(terms)}"
        ok2, d2, res2 = _all(p2, ["wz.extended", "wz.lie"])
        if not res2["wz.lie"].extra.get("lhs_nonzero"):
            ok2, d2 = False, "left side vanished on the n = 2 model"
        return ok and ok2, d or d2
    _criterion(5, "extended WZ and Lie-cocycle form agree term by term, twisted", 120, body)


def test_6_linf_ladder():
    def body():
        ok, d, _ = _all(M2, ["bv.jacobi", "bv.ccbv", "bv.bracket_table"])
        return ok, d
    _criterion(6, "generalized Jacobi, CCBV and the bracket table through K = 3", 120, body)


def test_7_laplace_and_second_order():
    def body():
        ok, d, _ = _all(M2, ["bv.laplace_product", "bv.A_second_order"])
        return ok, d
    _criterion(7, "lap_F on products and vanishing A'' for QME-satisfying F", 60, body)


def test_8_bv_implies_wz():
    def body():
        ok, d, _ = _all(M2, ["bv.bv_implies_wz"])
        return ok, d
    _criterion(8, "eta1 eta2 part of CCBV reproduces the WZ decomposition", 60, body)


def test_9_cocycle():
    def body():
        ok, d, _ = _all(M2, ["cocycle.identity", "cocycle.derivative", "cocycle.uamwi", "cocycle.group",
                             "cocycle.q_independence"])
        return ok, d
    _criterion(9, "zeta_e = id, tangent, UAMWI, group cocycle, q-independence", 180, body)


def test_10_gauge():
    cfg = parse_config({"model": "G1", "trials": 8, "caps": {"K": 2, "K_lam": 3, "K_mu": 3},
                        "twist": [{"order": 2, "site": 1, "comps": [0, 0], "coeff": "1/3"},
                                  {"order": 2, "site": 2, "comps": [0, 1], "coeff": "1/5"}]})

    def body():
        ok, d, res = _all(cfg, ["gauge.covariance", "gauge.composition", "gauge.G_cocycle", "gauge.G_locality",
                                "gauge.WZ", "gauge.phibar_independence"])
        if ok and not res["gauge.WZ"].extra.get("G_bracket_nonzero"):
            ok, d = False, "G([X,Y]) vanished in every WZ probe"
        return ok, d
    _criterion(10, "gauge covariance, cocycle, locality, WZ and phibar independence on G1", 120, body)


@pytest.mark.slow
def test_11_determinism(tmp_path):
    def body():
        outs = []
        for k in range(2):
            rep = tmp_path / f"r{k}.json"
            p = subprocess.run([sys.executable, "-m", "latticebv.cli", "verify", "--suite", "all", "--seed", "7",
                                "--report", str(rep)], capture_output=True, text=True)
            if p.returncode != 0:
                return False, f"exit {p.returncode}: {p.stderr.strip()[-300:]}"
            outs.append(rep.read_bytes())
        return outs[0] == outs[1], "reports differ"
    _criterion(11, "verify --suite all --seed 7 twice gives identical reports", 600, body)
