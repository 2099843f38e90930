import random

import pytest
from gmpy2 import mpq

from latticebv.galg import (
    I, FormalSeries, GradedPoly, Scalar, antifield, eta, field, gmul, series_exp, series_inv, series_log,
    support,
)

p0, p1 = GradedPoly.var(field(0)), GradedPoly.var(field(1))
a0, a1 = GradedPoly.var(antifield(0)), GradedPoly.var(antifield(1))
e1, e2 = GradedPoly.var(eta(1)), GradedPoly.var(eta(2))


def test_scalar_arithmetic():
    z = Scalar("1/2", 3)
    assert z * z.inverse() == Scalar(1)
    assert I * I == Scalar(-1)
    assert (z - z).is_real() and not (z - z)
    assert z.conjugate() == Scalar("1/2", -3)
    assert Scalar.from_json(z.to_json()) == z


def test_odd_generators_anticommute():
    assert a0 * a1 == -(a1 * a0)
    assert (a0 * a0).is_zero()
    assert e1 * a0 == -(a0 * e1)
    assert p0 * a0 == a0 * p0


def test_even_times_odd_parity():
    x = a0 * a1 + p0
    assert x.is_even()
    assert (a0 * p1).is_odd()
    assert not (a0 + p0).is_even() and not (a0 + p0).is_odd()


def test_left_and_right_odd_derivatives():
    x = a0 * a1
    assert x.dodd_left(antifield(0)) == a1
    assert x.dodd_right(antifield(0)) == -a1
    assert x.dodd_right(antifield(1)) == a0


def test_field_derivative():
    x = (p0 ** 3) * a1 + p0 * p1
    assert x.dfield(field(0)) == (p0 ** 2).scale(3) * a1 + p1


def test_support():
    assert support(p0 * a1 + GradedPoly.const(2)) == frozenset({0, 1})
    assert support(GradedPoly.const(2) + e1) == frozenset()


def test_evaluate_and_substitute():
    x = p0 * p0 * a1 + p1
    assert x.evaluate({field(0): 2, field(1): -1}) == a1.scale(4) - GradedPoly.const(1)
    assert x.substitute({field(0): p1}) == p1 * p1 * a1 + p1


def test_coefficient_of_odd_reads_from_the_right():
    x = (p0 * a0) * e1
    assert x.coefficient_of_odd((eta(1),)) == p0 * a0


def test_series_exp_coefficients():
    e = FormalSeries.param("eps", 5)
    ex = series_exp(e)
    for k, c in enumerate([1, 1, mpq(1, 2), mpq(1, 6), mpq(1, 24), mpq(1, 120)]):
        assert ex.coefficient(eps=k) == GradedPoly.const(c)


def test_series_log_of_one_plus_eps():
    e = FormalSeries.param("eps", 4)
    lg = series_log(FormalSeries.constant(1, ("eps",), (4,)) + e)
    assert [lg.coefficient(eps=k) for k in range(1, 5)] == \
        [GradedPoly.const(c) for c in (1, mpq(-1, 2), mpq(1, 3), mpq(-1, 4))]


def test_series_inverse_geometric():
    e = FormalSeries.param("eps", 3)
    inv = series_inv(FormalSeries.constant(1, ("eps",), (3,)) - e)
    assert all(inv.coefficient(eps=k) == GradedPoly.const(1) for k in range(4))


def test_series_with_nilpotent_constant():
    s = FormalSeries.lift(a0 * a1)
    assert series_exp(s) == FormalSeries.lift(GradedPoly.const(1) + a0 * a1)


def test_log_rejects_non_invertible():
    with pytest.raises(ValueError):
        series_log(FormalSeries.lift(p0))


def test_joint_caps_truncate():
    lam, mu = FormalSeries.param("lam", 1), FormalSeries.param("mu", 1)
    x = (lam + mu) ** 3
    assert x.coefficient(lam=1, mu=1).is_zero()
    assert ((lam + mu) ** 2).coefficient(lam=1, mu=1) == GradedPoly.const(2)


def test_gmul_matches_operator():
    rng = random.Random(3)
    from latticebv.galg import random_poly
    vs = [field(0), antifield(0), antifield(1), eta(1)]
    for _ in range(20):
        p, q = random_poly(rng, vs, 3, 2), random_poly(rng, vs, 3, 2)
        assert gmul(p, q) == p * q
