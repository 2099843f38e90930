import json
from pathlib import Path

import pytest

from latticebv import cli, suites
from latticebv.config import ConfigError, load_config, parse_config
from latticebv.report import CheckResult

ROOT = Path(__file__).resolve().parents[1]


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_explain_known_and_unknown(capsys):
    code, out, _ = run(["explain", "wz.extended"], capsys)
    assert code == 0 and "eq:WZ-0" in out and "statement:" in out
    code, _, err = run(["explain", "wz.nope"], capsys)
    assert code == 2 and "unknown" in err


def test_explain_list_covers_catalog(capsys):
    code, out, _ = run(["explain", "--list"], capsys)
    assert code == 0 and len(out.strip().splitlines()) == len(suites.CATALOG)


def test_every_suite_has_checks():
    assert set(suites.SUITES) == {"galg", "deform", "sym", "rg", "bv", "gauge", "cocycle"}


def test_verify_passes_and_is_deterministic(capsys):
    argv = ["verify", "--suite", "deform", "--model", "M2", "--seed", "3", "--trials", "4"]
    code1, out1, _ = run(argv, capsys)
    code2, out2, _ = run(argv, capsys)
    assert code1 == code2 == 0 and out1 == out2
    rep = json.loads(out1)
    assert rep["summary"]["failed"] == 0 and all("seconds" not in c for c in rep["checks"])


def test_timings_flag(capsys):
    code, out, _ = run(["verify", "--check", "bv.conventions", "--timings"], capsys)
    assert code == 0 and "seconds" in json.loads(out)["checks"][0]


def test_failing_check_exits_1_with_reproducer(capsys, monkeypatch):
    def bad(env):
        r = CheckResult.from_bool("x", False)
        r.inputs = {"F": "phi0"}
        return r
    e = suites.CATALOG["bv.conventions"]
    monkeypatch.setitem(suites.CATALOG, "bv.conventions", e.__class__(*list(vars_of(e))[:-1], bad))
    code, out, _ = run(["verify", "--check", "bv.conventions"], capsys)
    rec = json.loads(out)["checks"][0]
    assert code == 1 and rec["status"] == "fail" and rec["reproducer"] == {"F": "phi0"}


def vars_of(e):
    return (e.id, e.suite, e.anchor, e.name, e.statement, e.fn)


def test_internal_error_exits_3(capsys, monkeypatch):
    def boom(env):
        raise RuntimeError("boom")
    e = suites.CATALOG["bv.conventions"]
    monkeypatch.setitem(suites.CATALOG, "bv.conventions", e.__class__(*vars_of(e)[:-1], boom))
    code, _, err = run(["verify", "--check", "bv.conventions"], capsys)
    assert code == 3 and "boom" in err


@pytest.mark.parametrize("argv", [
    ["verify", "--model", "nope"],
    ["verify", "--suite", "weird"],
    ["verify", "--order", "0"],
    ["verify", "--check", "no.such"],
    ["verify", "--config", "/does/not/exist.json"],
])
def test_config_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2 and "config error" in err


def test_bad_json(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    assert run(["verify", "--config", str(p)], capsys)[0] == 2


def test_parse_config_validation():
    with pytest.raises(ConfigError):
        parse_config({})
    with pytest.raises(ConfigError):
        parse_config({"model": {"sites": [0], "n": 1}})
    with pytest.raises(ConfigError):
        parse_config({"model": "M1", "twist": [{"order": 2}]})
    with pytest.raises(ConfigError):
        parse_config({"model": {"sites": [0, 1], "n": 1, "M": [["1", "1"], ["1", "1"]]}})
    cfg = parse_config({"model": "M2", "twist": [{"order": 2, "site": 7, "comps": [0, 0], "coeff": "1"}]})
    assert not cfg.contexts()[1].twisted


def test_shipped_configs_parse():
    for p in sorted((ROOT / "configs").glob("*.json")):
        assert load_config(p).model.size > 0


def test_goldens_missing_match_and_mismatch(tmp_path, capsys):
    base = ["verify", "--check", "rg.sigma", "--golden-dir", str(tmp_path)]
    code, out, _ = run(base, capsys)
    assert code == 0 and json.loads(out)["checks"][0]["extra"]["golden"] == "missing"
    run(base + ["--update-goldens"], capsys)
    code, out, _ = run(base, capsys)
    assert code == 0 and json.loads(out)["checks"][0]["extra"]["golden"] == "match"
    (tmp_path / "rg.sigma.json").write_text('{"sigma": -1}')
    code, out, _ = run(base, capsys)
    assert code == 1 and json.loads(out)["checks"][0]["extra"]["golden"]["expected"] == {"sigma": -1}


def test_shipped_goldens_match(capsys):
    code, out, _ = run(["verify", "--check", "rg.sigma,rg.twisted_anomaly,bv.conventions"], capsys)
    assert code == 0
    assert {c["extra"]["golden"] for c in json.loads(out)["checks"]} == {"match"}


def test_float_demo_in_report(tmp_path, capsys):
    rep = tmp_path / "r.json"
    code, _, _ = run(["verify", "--check", "rg.sigma", "--float-demo", "--report", str(rep)], capsys)
    d = json.loads(rep.read_text())
    assert code == 0 and d["float_demo"]["status"] == "pass"


def test_worker_pool_gives_same_report(capsys, monkeypatch):
    argv = ["verify", "--suite", "sym", "--trials", "3"]
    _, serial, _ = run(argv, capsys)
    monkeypatch.setenv("LATTICEBV_WORKERS", "2")
    _, pooled, _ = run(argv, capsys)
    assert serial == pooled
