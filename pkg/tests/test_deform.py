from gmpy2 import mpq

from latticebv.config import model_from_json
from latticebv.deform import Deformation, FreeModel, as_series, lagrangian, twist
from latticebv.galg import I, FormalSeries, GradedPoly, Scalar, antifield, field, series_log
from latticebv.rg import RenMap

M1, M2 = model_from_json("M1"), model_from_json("M2")
p0, p1 = GradedPoly.var(field(0)), GradedPoly.var(field(1))


def test_m2_matrix():
    assert M2.M == [[2, -1], [-1, 2]]
    assert M2.E[0][0] == Scalar(0, mpq(2, 3)) and M2.E[0][1] == Scalar(0, mpq(1, 3))


def test_wick_on_one_site():
    assert M1.wick(p0 ** 2) == p0 ** 2 + GradedPoly.const(I)
    assert M1.wick(p0 ** 4) == p0 ** 4 + (p0 ** 2).scale(6 * I) - GradedPoly.const(3)


def test_wick_cross_contraction():
    assert M2.wick(p0 * p1) == p0 * p1 + GradedPoly.const(Scalar(0, mpq(1, 3)))


def test_antifields_are_spectators():
    a = GradedPoly.var(antifield(0))
    assert M1.wick(p0 * p0 * a) == (p0 * p0 + GradedPoly.const(I)) * a


def test_vacuum_log_of_linear_source():
    S = Deformation(M1).smatrix(as_series(p0, 3))
    log0 = series_log(S).map(lambda q: q.evaluate({field(0): 0}))
    assert log0.coefficient(eps=2) == GradedPoly.const(Scalar(0, mpq(-1, 2)))
    assert log0.coefficient(eps=1).is_zero() and log0.coefficient(eps=3).is_zero()


def test_twist_adds_2ic_at_first_order():
    c = mpq(1, 3)
    F = as_series(p0 ** 2, 2)
    diff = twist(M1, RenMap.single(2, 0, (0, 0), c)).smatrix(F) - Deformation(M1).smatrix(F)
    assert diff.coefficient(eps=1) == GradedPoly.const(Scalar(0, 2 * c))


def test_lagrangian_values():
    L = lagrangian(M2)
    assert L == (p0 * p0 + p1 * p1 - p0 * p1)
    assert L.evaluate({field(0): 1, field(1): 1}) == GradedPoly.const(1)


def test_from_graph_mass_and_components():
    m = FreeModel.from_graph([0, 1], 2, [(0, 1)], 1)
    assert m.size == 4 and m.M[0][2] == -1 and m.M[0][1] == 0 and m.M[1][1] == 2


def test_singular_model_rejected():
    import pytest
    with pytest.raises(ValueError):
        FreeModel([0, 1], 1, [[1, 1], [1, 1]])
