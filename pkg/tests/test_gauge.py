import pytest
from gmpy2 import mpq

from latticebv import gauge
from latticebv.config import model_from_json
from latticebv.deform import Deformation, as_series, lagrangian, twist
from latticebv.galg import FormalSeries, GradedPoly, Scalar, field
from latticebv.rg import RenMap
from latticebv.sym import LieSymmetry

G1 = model_from_json("G1")
A = gauge.Connection(G1, {(0, 1): [[0, -1], [1, 0]], (1, 2): [[1, "1/2"], [0, 1]]})
g = gauge.OrthoGauge.rotation(2, 1, 0, 1, (3, 4, 5))
h = gauge.OrthoGauge.rotation(2, 2, 0, 1, (5, 12, 13)) * gauge.OrthoGauge.rotation(2, 0, 0, 1, (4, 3, 5))
TW = twist(G1, RenMap([*RenMap.single(2, 1, (0, 0), mpq(1, 3)).kernels,
                       *RenMap.single(2, 2, (0, 1), mpq(1, 5)).kernels]))


def test_trivial_connection_is_free():
    assert gauge.build_LA(G1, gauge.Connection(G1)) == lagrangian(G1)
    assert gauge.potential(G1, gauge.Connection(G1)).is_zero()


def test_transform_of_trivial_connection():
    At = gauge.gauge_transform(g, gauge.Connection(G1))
    gm = g.at(1)
    assert At.at((1, 2)) == tuple(tuple(gm[j][i] for j in range(2)) for i in range(2))
    assert At.at((0, 1)) == gm


def test_validation():
    with pytest.raises(ValueError):
        gauge.Connection(G1, {(0, 2): [[1, 0], [0, 1]]})
    with pytest.raises(ValueError):
        gauge.Connection(G1, {(0, 1): [[1, 1], [1, 1]]})
    with pytest.raises(ValueError):
        gauge.OrthoGauge(2, {0: [[0, 1], [1, 0]]})
    with pytest.raises(ValueError):
        gauge.OrthoGauge.rotation(2, 0, 0, 1, (1, 2, 3))


def test_covariance_and_composition():
    assert gauge.check_covariance(G1, g, A, [1, 2, 0, -1, 3, 1, 2, 2]).ok
    assert gauge.check_transform_composition(g, h, A).ok


def test_untwisted_anomaly_vanishes():
    assert gauge.frak_G(Deformation(G1), g, A).is_zero()


def test_twisted_anomaly_value():
    # c (g B g^T - B)_00 with B = W12^T W12 and c = 1/3
    assert gauge.frak_G(TW, g, A) == FormalSeries.lift(GradedPoly.const(mpq(-8, 75)))


def test_cocycle_both_kinds():
    assert gauge.check_G_cocycle(TW, g, h, A).ok
    gp = gauge.GaugePath(2, {1: [[0, 1], [-1, 0]]}, "lam", 2)
    hp = gauge.GaugePath(2, {2: [[0, 1], [-1, 0]]}, "mu", 2)
    assert gauge.check_G_cocycle(TW, gp, hp, A).ok


def test_locality_probes():
    w1, w2 = {(0, 1): [[1, 0], [0, 0]]}, {(2, 3): [[0, 1], [0, 0]]}
    g0 = gauge.OrthoGauge.rotation(2, 0, 0, 1, (3, 4, 5))
    g3 = gauge.OrthoGauge.rotation(2, 3, 0, 1, (8, 15, 17))
    r = gauge.check_G_locality(TW, A, {"AA": (h, w1, w2), "gA": (g0, h, w2), "gg": (g0, g3, h)})
    assert r.ok


def test_gaussian_vacuum_log_one_site():
    m = model_from_json("M1")
    p = GradedPoly.var(field(0))
    # -1/2 log(1 + q) - (i/2) j^2/(1 + q) at q = eps/2, j = eps
    F = as_series((p * p).scale(mpq(1, 4)) + p, 3)
    got = gauge.log_smatrix_vacuum(Deformation(m), F)
    want = [0, mpq(-1, 4), Scalar(mpq(1, 16), mpq(-1, 2)), Scalar(mpq(-1, 48), mpq(1, 4))]
    for k, w in enumerate(want):
        assert got.coefficient(eps=k) == GradedPoly.const(w)


def test_gaussian_closed_form_against_wick():
    for ctx in (Deformation(G1), TW):
        assert gauge.check_gaussian_closed_form(ctx, as_series(gauge.potential(G1, A) + GradedPoly.var(field(2, 1)), 2)).ok


def test_gamma_shift_and_wz():
    assert gauge.check_gamma_shift(TW, g, A, [[1, 2, 0, -1, 3, 1, 2, 2], [0] * 8], 2).ok
    X = LieSymmetry(2, {1: [[0, 1], [-1, 0]]})
    Y = LieSymmetry(2, {1: [[0, 2], [-2, 0]], 2: [[0, 1], [-1, 0]]})
    assert gauge.check_WZ_gauge(TW, X, Y, A, 2).ok


def test_nonabelian_wz_has_nonzero_bracket_term():
    G3 = model_from_json("G3")
    A3 = gauge.Connection(G3, {(1, 2): [[1, "1/2", 0], [0, 1, "1/3"], [0, 0, 1]]})
    ctx = twist(G3, RenMap([RenMap.single(2, 1, c, mpq(1, k)).kernels[0] for c, k in (((0, 1), 3), ((1, 1), 5), ((0, 2), 7))]))
    X = LieSymmetry(3, {1: [[0, 1, 0], [-1, 0, 0], [0, 0, 0]]})
    Y = LieSymmetry(3, {1: [[0, 0, 0], [0, 0, 1], [0, -1, 0]]})
    r = gauge.check_WZ_gauge(ctx, X, Y, A3, 2)
    assert r.ok and r.extra["G_bracket_nonzero"]
