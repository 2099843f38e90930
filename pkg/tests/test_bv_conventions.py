from gmpy2 import mpq

from latticebv import bv
from latticebv.config import model_from_json
from latticebv.deform import Deformation, as_series, twist
from latticebv.galg import I, FormalSeries, GradedPoly, Scalar, antifield, eta, field
from latticebv.rg import RenMap, solve_anomaly
from latticebv.sym import LieSymmetry

M1, M2 = model_from_json("M1"), model_from_json("M2")
p0, p1 = GradedPoly.var(field(0)), GradedPoly.var(field(1))
a0, a1 = GradedPoly.var(antifield(0)), GradedPoly.var(antifield(1))
e1 = GradedPoly.var(eta(1))


def test_antibracket_sign():
    assert bv.antibracket(a0, p0) == GradedPoly.const(-1)
    assert bv.antibracket(p0, a0) == GradedPoly.const(1)


def test_laplacian_sign():
    assert bv.laplacian(p0 * a0) == GradedPoly.const(-1)
    assert bv.laplacian(p0 * p0 * a0) == p0.scale(-2)


def test_free_differential():
    assert bv.s0(M2, a0) == -(p0.scale(2) - p1)
    assert bv.s0(M2, p0).is_zero()


def test_vector_field_puts_eta_on_the_right():
    X = LieSymmetry(1, {0: [[3]]})
    assert bv.vector_field(X, M1, 1) == p0.scale(3) * a0 * e1


def test_anomaly_is_i_lap_of_vector_field():
    X = LieSymmetry(1, {0: [[1]]})
    for ctx in (Deformation(M1), twist(M1, RenMap.single(2, 0, (0, 0), mpq(1, 3)))):
        F = as_series(p0 ** 3, 3)
        assert bv.anomaly_via_laplacian(ctx, X, F) == solve_anomaly(ctx, X, F)
        assert bv.check_anomaly_routes(ctx, X, F).ok


def test_antifield_free_interaction_solves_qme():
    q = bv.check_qme(Deformation(M2), as_series(p0 ** 3, 3))
    assert q["s0_form"] and q["bracket_form"]


def test_lap_F_matches_lap_untwisted():
    X = p0 * p0 * a0 + p1 * a1 * a0
    assert FormalSeries.lift(bv.lap_F(Deformation(M2), as_series(p0 ** 3, 2), X)) == FormalSeries.lift(bv.laplacian(X))


def test_closing_remark_example():
    X = (p0 * p0 * a0 + p1 * p1 * a1 * p0) * e1
    Y = (p1 * p0 * a1 + p1 * a0) * GradedPoly.var(eta(2))
    assert bv.check_closing_remark(X, Y).ok
