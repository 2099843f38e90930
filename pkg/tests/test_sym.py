import pytest
from gmpy2 import mpq

from latticebv.config import model_from_json
from latticebv.galg import GradedPoly, field
from latticebv.sym import GroupElement, LieSymmetry, act_config, delta_gL, lie_bracket, partial_X, pullback

M2 = model_from_json("M2")
p0, p1 = GradedPoly.var(field(0)), GradedPoly.var(field(1))


def test_pullback_scales_and_shifts():
    g = GroupElement(1, {0: [[2]]}, {0: [1]})
    assert pullback(g, p0 * p0, M2) == (p0.scale(2) + GradedPoly.const(1)) ** 2


def test_permutation_swaps_sites():
    g = GroupElement(1, rho={0: 1, 1: 0})
    assert pullback(g, p0 * p1 * p1, M2) == p1 * p0 * p0
    assert act_config(g, {field(0): 5, field(1): 7})[field(0)] == 7


def test_group_product_and_inverse():
    g = GroupElement(1, {0: [["1/2"]]}, {1: [3]}, {0: 1, 1: 0})
    e = GroupElement.identity(1)
    assert g * g.inverse() == e
    assert g.det() == mpq(1, 2)


def test_singular_element_rejected():
    with pytest.raises(ValueError):
        GroupElement(2, {0: [[1, 2], [2, 4]]})


def test_delta_gL_for_a_dilation():
    g = GroupElement(1, {0: [[2]]})
    # L = phi0^2 + phi1^2 - phi0 phi1, f = 1 everywhere
    assert delta_gL(g, M2) == (p0 * p0).scale(3) - p0 * p1


def test_bracket_of_dilation_and_shift():
    X = LieSymmetry(1, {0: [[1]]})
    Y = LieSymmetry(1, p={0: [1]})
    br = lie_bracket(X, Y)
    assert br.a == {} and br.p != {}
    F = p0 ** 3
    lhs = partial_X(X, partial_X(Y, F, M2), M2) - partial_X(Y, partial_X(X, F, M2), M2)
    assert lhs == partial_X(br, F, M2)


def test_trace():
    assert LieSymmetry(2, {0: [[1, 2], [3, 4]], 1: [[-1, 0], [0, 0]]}).trace() == 4
