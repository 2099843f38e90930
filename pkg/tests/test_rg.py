from gmpy2 import mpq

from latticebv.config import model_from_json
from latticebv.deform import Deformation, as_series, twist
from latticebv.galg import FormalSeries, GradedPoly, Scalar, field
from latticebv.rg import Kernel, RenMap, check_AMWI, solve_anomaly
from latticebv.sym import LieSymmetry

M1, M2 = model_from_json("M1"), model_from_json("M2")
p0, p1 = GradedPoly.var(field(0)), GradedPoly.var(field(1))
DIL = LieSymmetry(1, {0: [[1]]})
C = mpq(1, 3)
TW = twist(M1, RenMap.single(2, 0, (0, 0), C))


def test_untwisted_anomaly_is_i_trace():
    X = LieSymmetry(1, {0: [[2]], 1: [[-5]]}, {0: [3]})
    d = solve_anomaly(Deformation(M2), X, as_series(p0 ** 3 + p1 ** 2, 3))
    assert d == FormalSeries.lift(GradedPoly.const(Scalar(0, -3)))


def test_shift_has_no_anomaly():
    X = LieSymmetry(1, p={0: [1], 1: [-2]})
    assert solve_anomaly(TW, LieSymmetry(1, p={0: [1]}), as_series(p0 ** 3, 3)).is_zero()
    assert solve_anomaly(Deformation(M2), X, as_series(p0 ** 4, 2)).is_zero()


def test_twisted_anomaly_closed_form():
    # Delta X(F) = i + 2c (1 + F'') for the dilation and z = c d^2
    d = solve_anomaly(TW, DIL, as_series(p0 ** 3, 3))
    assert d.coefficient(eps=0) == GradedPoly.const(Scalar(2 * C, 1))
    assert d.coefficient(eps=1) == p0.scale(12 * C)
    assert d.coefficient(eps=2).is_zero() and d.coefficient(eps=3).is_zero()
    q = solve_anomaly(TW, DIL, as_series(p0 ** 4, 2))
    assert q.coefficient(eps=1) == (p0 * p0).scale(24 * C)


def test_amwi_holds_on_shell():
    for ctx in (Deformation(M2), twist(M2, RenMap.single(2, 1, (0, 0), C))):
        X = LieSymmetry(1, {0: [[1]], 1: [[2]]}, {1: [1]})
        assert check_AMWI(ctx, X, p0 ** 3 - p0 * p1, [1, -2], 3).ok


def test_renmap_round_trip():
    Z = RenMap([Kernel(2, 0, (0, 0), Scalar(C)), Kernel(4, 0, (0, 0, 0, 0), Scalar("1/5"))])
    F = as_series(p0 ** 4 + p0, 3)
    assert Z.apply_inverse(Z.apply(F)) == F
    assert Z.compose(Z.inverse()).is_identity() or Z.compose(Z.inverse()).apply(F) == F


def test_counterterm_of_a_quadratic():
    Z = RenMap.single(2, 0, (0, 0), C)
    assert Z.z(p0 * p0) == GradedPoly.const(2 * C)
    assert Z.z(p1 * p1).is_zero()
