"""The checks must be able to fail: corrupt one ingredient and watch the verdict flip."""

import random

from latticebv import bv, rg, suites
from latticebv.config import parse_config
from latticebv.deform import as_series
from latticebv.galg import FormalSeries, GradedPoly, field
from latticebv.sym import LieSymmetry

CFG = parse_config({"model": "M2", "trials": 4})


def test_catalog_entries_are_complete():
    for cid, e in suites.CATALOG.items():
        assert e.suite in cid or cid.startswith("wz.")
        assert e.anchor and e.name and e.statement


def test_rng_is_per_check():
    a = suites.Env(CFG, "rg.amwi").rng.random()
    b = suites.Env(CFG, "rg.amwi").rng.random()
    c = suites.Env(CFG, "bv.jacobi").rng.random()
    assert a == b != c


def test_wz_detects_a_corrupted_term():
    ctx = CFG.contexts()[1]
    p0 = GradedPoly.var(field(0))
    X, Y = LieSymmetry(1, {0: [[1]]}), LieSymmetry(1, {1: [[2]]}, {0: [1]})
    F = as_series(p0 ** 4 + p0, 3)
    t = rg.wz0_terms(ctx, X, Y, F)
    assert rg.check_extended_WZ(ctx, X, Y, F, terms=t).ok
    t["t1"] = t["t1"] + FormalSeries.lift(p0)
    assert not rg.check_extended_WZ(ctx, X, Y, F, terms=t).ok


def test_amwi_detects_a_wrong_anomaly(monkeypatch):
    real = rg.solve_anomaly
    monkeypatch.setattr(rg, "solve_anomaly", lambda ctx, X, F, K=None: real(ctx, X, F, K) + FormalSeries.constant(1))
    assert not suites.run_check(CFG, "rg.amwi").ok


def test_conventions_detect_a_flipped_bracket(monkeypatch):
    real = bv.antibracket
    monkeypatch.setattr(bv, "antibracket", lambda F, G: -real(F, G))
    assert not suites.run_check(CFG, "bv.conventions").ok


def test_routes_detect_a_wrong_eta_side(monkeypatch):
    real = bv.vector_field
    monkeypatch.setattr(bv, "vector_field", lambda X, m, k=None: -real(X, m, k))
    r = suites.run_check(CFG, "bv.anomaly_routes")
    assert not r.ok and "reproducer" in r.to_json()


def test_collect_keeps_first_failure():
    ok = suites.CheckResult.from_bool("c", True)
    bad = suites.CheckResult.from_bool("c", False)
    out = suites._collect("c", [(ok, {"i": 0}), (bad, {"i": 1}), (bad, {"i": 2})])
    assert not out.ok and out.inputs == {"i": 1} and out.extra["failed_trials"] == [1, 2]


def test_gauge_suite_passes_on_shipped_config():
    cfg = parse_config({"model": "M2", "trials": 4, "gauge": {"model": "G1"}})
    assert suites.run_check(cfg, "gauge.covariance").ok


def test_random_lie_antisymmetric():
    X = suites.rand_lie(random.Random(0), CFG.model, antisym=True)
    assert all(m[0][0] == 0 for m in X.a.values())
