import pytest
from gmpy2 import mpq

from latticebv import cocycle
from latticebv.cli import float_demo
from latticebv.config import model_from_json
from latticebv.deform import Deformation, as_series, twist
from latticebv.galg import GradedPoly, Scalar, field
from latticebv.rg import RenMap
from latticebv.sym import GroupElement, LieSymmetry

M1, M2 = model_from_json("M1"), model_from_json("M2")
p0, p1 = GradedPoly.var(field(0)), GradedPoly.var(field(1))
DIL = LieSymmetry(1, {0: [[1]]})


def test_dilation_cocycle_series():
    # zeta(F) - F = i lam + c (1 + 2 beta)(e^{2 lam} - 1)
    c, beta = mpq(1, 3), mpq(1, 2)
    ctx = twist(M1, RenMap.single(2, 0, (0, 0), c))
    F = (p0 * p0).scale(beta) + p0.scale(2)
    z = cocycle.integrate_zeta(ctx, DIL, 6).apply(F) - F
    fact = 1
    for k in range(1, 7):
        fact *= k
        want = Scalar(c * (1 + 2 * beta) * 2 ** k / fact, 1 if k == 1 else 0)
        assert z.coefficient(lam=k) == GradedPoly.const(want)


def test_float_demo_agrees():
    out = float_demo()
    assert out["status"] == "pass" and out["abs_error"] < 1e-9


def test_identity_and_derivative():
    ctx = twist(M2, RenMap.single(2, 0, (0, 0), mpq(1, 3)))
    X = LieSymmetry(1, {0: [[1]], 1: [[-1]]}, {0: [1]})
    F = as_series(p0 ** 3 + p0 * p1, 3)
    assert cocycle.check_zeta_identity(ctx, X, F).ok
    assert cocycle.check_zeta_derivative(ctx, X, F).ok


def test_group_cocycle_and_q_independence():
    ctx = twist(M2, RenMap.single(2, 1, (0, 0), mpq(1, 5)))
    X, Y = LieSymmetry(1, {0: [[1]]}), LieSymmetry(1, {1: [[-1]]}, {0: [1]})
    F = as_series(p0 ** 2 * p1, 3)
    assert cocycle.check_group_cocycle(ctx, X, Y, F).ok
    assert cocycle.check_q_independence(ctx, X, F, [1, 0], [-2, 3]).ok


def test_closed_form_needs_unit_determinant():
    ctx = Deformation(M2)
    with pytest.raises(ValueError):
        cocycle.closed_form_zeta(ctx, GroupElement(1, {0: [[2]]}))
    g = GroupElement(1, psi={0: [1]}, rho={0: 1, 1: 0})
    assert cocycle.check_element_cocycle(ctx, g, g, as_series(p0 ** 3, 2)).ok


def test_affine_anomaly():
    ctx = twist(M1, RenMap([*RenMap.single(2, 0, (0, 0), mpq(1, 3)).kernels,
                            *RenMap.single(4, 0, (0, 0, 0, 0), mpq(1, 5)).kernels]))
    assert cocycle.check_affine_anomaly(ctx, DIL, [p0 ** 3, p0 ** 6, p0 + p0 ** 4]).ok
