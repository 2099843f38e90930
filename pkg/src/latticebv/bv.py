"""Antibracket, BV operators, BV Laplacians, the BV anomaly A and L-infinity brackets.

Conventions (fixed by tests/test_bv_conventions.py):

    {F, G} = sum_j dr F/d phi_j  dl G/d phi#_j  -  dr F/d phi#_j  dl G/d phi_j
    s_F X  = {X, L + F}
    lap X  = -sum_j d_j (dr X / d phi#_j)      (= i(s0-hat - s0))

so {phi#_0, phi_0} = -1 and lap(phi_0 phi#_0) = -1.  A vector field X
becomes the multivector sum_j (phi X)_j phi#_j, with a multiplier eta on
the right to make it even.

In a twisted context every quantum operator is conjugated by Z, which acts
on field variables only.
"""

from __future__ import annotations

from typing import Callable, Sequence

from .galg import (
    ANTIFIELD, I, FIELD, ONE, MULTIPLIER, FormalSeries, GradedPoly, Scalar, VarId,
    antifield, eta, field, series_exp,
)
from .deform import Deformation, FreeModel, lagrangian
from .report import CheckResult
from .rg import directional, solve_anomaly, wz0_terms
from .sym import LieSymmetry

__all__ = [
    "antibracket", "s_classical", "s0", "s_hat0", "s_hat", "lap_F", "laplacian",
    "bv_generator", "solve_bv_anomaly", "generating_bracket", "linf_bracket",
    "vector_field", "check_generalized_jacobi", "check_qme", "check_ccbv",
    "check_lemma_aux", "check_laplace_product", "check_A_second_order",
    "check_bv_implies_wz", "check_closing_remark", "odd_directional",
    "anomaly_via_laplacian", "check_anomaly_routes",
]

HALF = Scalar("1/2")


def _pairs(*objs) -> list:
    """Field/antifield slots (site, comp) appearing in the arguments."""
    slots = set()
    for o in objs:
        vs = o.variables()
        for v in vs:
            if v.kind in (FIELD, ANTIFIELD):
                slots.add((v.site, v.comp))
    return sorted(slots)


def _lin(x, fn):
    return x.map(fn) if isinstance(x, FormalSeries) else fn(x)


def antibracket(F, G):
    """{F, G} with the sign convention of the module docstring."""
    out = None
    for s, c in _pairs(F, G):
        f, a = field(s, c), antifield(s, c)
        dF = _lin(F, lambda p: p.dfield(f))
        dG = _lin(G, lambda p: p.dodd_left(a))
        term = None
        if not _is0(dF) and not _is0(dG):
            term = dF * dG
        eF = _lin(F, lambda p: p.dodd_right(a))
        eG = _lin(G, lambda p: p.dfield(f))
        if not _is0(eF) and not _is0(eG):
            t2 = eF * eG
            term = -t2 if term is None else term - t2
        if term is not None:
            out = term if out is None else out + term
    if out is None:
        return _zero_like(F, G)
    return out


def _is0(x) -> bool:
    return x.is_zero()


def _zero_like(*objs):
    for o in objs:
        if isinstance(o, FormalSeries):
            return FormalSeries(o.params, o.caps)
    return GradedPoly()


def s0(m: FreeModel, X):
    """s_0 X = {X, L}."""
    return antibracket(X, lagrangian(m))


def s_classical(m: FreeModel, F, X):
    """s_F X = {X, L + F}."""
    return antibracket(X, _add(lagrangian(m), F))


def _add(a, b):
    if isinstance(a, GradedPoly) and isinstance(b, FormalSeries):
        return FormalSeries.lift(a, b) + b
    return a + b


def laplacian(X):
    """The naive BV Laplacian -sum_j d_j dr/d phi#_j."""
    out = None
    for s, c in _pairs(X):
        f, a = field(s, c), antifield(s, c)
        t = _lin(X, lambda p: p.dodd_right(a).dfield(f))
        if not t.is_zero():
            out = -t if out is None else out - t
    return out if out is not None else _zero_like(X)


def s_hat0(ctx: Deformation, X):
    """Z^-1 T^-1 s_0 T Z (X)."""
    return ctx.z_inverse(ctx.Tinv(s0(ctx.model, ctx.T(ctx.z_apply(X)))))


def _expi(ctx: Deformation, F, sign=1):
    return series_exp(FormalSeries.lift(ctx.z_apply(F)).scale(I if sign > 0 else -I))


def s_hat(ctx: Deformation, F, X):
    """s-hat_F X = e^{-iF} s-hat_0(e^{iF} X), read through Z."""
    inner = ctx.Tinv(s0(ctx.model, ctx.T(_expi(ctx, F) * ctx.z_apply(X))))
    return ctx.z_inverse(_expi(ctx, F, -1) * inner)


def lap_F(ctx: Deformation, F, X):
    """lap_F = i (s-hat_F - s_F)."""
    return (s_hat(ctx, F, X) - s_classical(ctx.model, F, X)).scale(I)


def bv_generator(ctx: Deformation, calF):
    """-i e^{-i calF} s-hat_0(e^{i calF}) through Z; equals (1/2){L+F,L+F} + A(F)."""
    inner = ctx.Tinv(s0(ctx.model, ctx.T(_expi(ctx, calF))))
    return ctx.z_inverse(_expi(ctx, calF, -1) * inner).scale(-I)


def solve_bv_anomaly(ctx: Deformation, calF):
    """A(calF) = generator - (1/2){L + calF, L + calF}."""
    LF = _add(lagrangian(ctx.model), calF)
    return bv_generator(ctx, calF) - antibracket(LF, LF).scale(HALF)


def generating_bracket(ctx: Deformation, F, calX):
    """[e^{iX}]^F = e^{-iX} s-hat_F(e^{iX}) = i * generator(F + X)."""
    return bv_generator(ctx, FormalSeries.lift(F) + calX).scale(I)


_TS = ("t1", "t2", "t3", "t4", "t5", "t6")


def _require_even(x):
    par = (x.is_even(), all(c.is_odd() for c in FormalSeries.lift(x).coeffs.values()))
    if isinstance(x, GradedPoly):
        par = (x.is_even(), x.is_odd() and bool(x.terms))
    if not par[0]:
        if par[1]:
            raise ValueError("odd input: multiply by a multiplier generator to make it even")
        raise ValueError("non-homogeneous input")


def linf_bracket(ctx: Deformation, F, args: Sequence):
    """[X1, ..., Xn]^F by polarization: i^-n times the t1...tn coefficient."""
    n = len(args)
    if n > len(_TS):
        raise ValueError("too many arguments")
    total = FormalSeries.constant(0)
    for k, x in enumerate(args):
        _require_even(x)
        total = total + FormalSeries.param(_TS[k], 1) * x
    val = generating_bracket(ctx, F, total)
    for k in range(n):
        val = val.drop(_TS[k], 1)
    return val.scale(I ** (-n))


def vector_field(X: LieSymmetry, m: FreeModel, multiplier: int | None = None) -> GradedPoly:
    """d_X as sum_j (phi X)_j phi#_j, optionally times eta_k on the right."""
    out = GradedPoly()
    for j, v in enumerate(X.phiX(m)):
        if v.terms:
            out = out + v * GradedPoly.var(antifield(m.vars[j].site, m.vars[j].comp))
    if multiplier is not None:
        out = out * GradedPoly.var(eta(multiplier))
    return out


def odd_directional(fn: Callable, base, direction, k: int = 99):
    """<fn'(base), direction> for an odd direction: dr/d eta_k fn(base + direction eta_k)."""
    e = GradedPoly.var(eta(k))
    val = fn(FormalSeries.lift(base) + FormalSeries.lift(direction) * e)
    return _lin(val, lambda p: p.dodd_right(eta(k)).restrict(lambda ev, od: eta(k) not in od))


def _deriv(fn, base, direction):
    d = FormalSeries.lift(direction)
    if d.is_even():
        return directional(fn, base, d)
    if all(c.is_odd() for c in d.coeffs.values()):
        return odd_directional(fn, base, d)
    raise ValueError("direction must have homogeneous parity")


# -- checks ---------------------------------------------------------------

def check_generalized_jacobi(ctx: Deformation, F, calX, k: int = 98) -> CheckResult:
    """[e^{iX}, [e^{iX}]^F]^F = 0 via (1/i) d/dlam [e^{i(X + lam G)}]^F, G = eta [e^{iX}]^F."""
    _require_even(calX)
    br = generating_bracket(ctx, F, calX)
    e = GradedPoly.var(eta(k))
    G = e * FormalSeries.lift(br)
    lam = FormalSeries.param("s", 1)
    val = generating_bracket(ctx, F, FormalSeries.lift(calX) + lam * G).drop("s", 1)
    val = val.scale(-I)
    stripped = val.map(lambda p: p.dodd_left(eta(k)))
    rest = val.map(lambda p: p.restrict(lambda ev, od: eta(k) not in od))
    return CheckResult.from_residual("bv.jacobi", stripped + rest)


def check_qme(ctx: Deformation, calF) -> dict:
    """Both forms of the quantum master equation; returns their truth values."""
    form1 = s0(ctx.model, ctx.T(_expi(ctx, calF)))
    LF = _add(lagrangian(ctx.model), calF)
    form2 = antibracket(LF, LF).scale(HALF) + solve_bv_anomaly(ctx, calF)
    return {"s0_form": FormalSeries.lift(form1).is_zero(), "bracket_form": FormalSeries.lift(form2).is_zero()}


def ccbv_pieces(ctx: Deformation, calF) -> dict:
    m = ctx.model
    LF = _add(lagrangian(m), calF)
    A = solve_bv_anomaly(ctx, calF)
    half = antibracket(LF, LF).scale(HALF)
    fn = lambda G: solve_bv_anomaly(ctx, G)
    return {
        "bracket": antibracket(LF, A),
        "A_prime_half": _deriv(fn, calF, half),
        "A_prime_A": _deriv(fn, calF, A),
        "A": A,
    }


def check_ccbv(ctx: Deformation, calF) -> CheckResult:
    """0 = {L+F, A(F)} + <A'(F), (1/2){L+F, L+F} + A(F)>."""
    p = ccbv_pieces(ctx, calF)
    return CheckResult.from_residual("bv.ccbv", p["bracket"] + p["A_prime_half"] + p["A_prime_A"])


def check_lemma_aux(ctx: Deformation, G: GradedPoly, Y: GradedPoly) -> CheckResult:
    """(G (M phi)_j) ._T Y = (G ._T Y)(M phi)_j + i G dY/dphi_j for every j."""
    m = ctx.model
    if Y.field_degree() > 1:
        raise ValueError("Y must be at most linear in the fields")
    T, Ti = ctx.T, ctx.Tinv
    tp = lambda a, b: T(Ti(a) * Ti(b))
    res = GradedPoly()
    bad = []
    for j, v in enumerate(m.vars):
        e = m.eom(j)
        r = tp(G * e, Y) - tp(G, Y) * e - (G * Y.dfield(v)).scale(I)
        if r.terms:
            bad.append(str(v))
            res = res + r
    out = CheckResult.from_residual("bv.lemma_aux", res)
    if bad:
        out.extra["failing_sites"] = bad
    return out


def qme_residual(ctx: Deformation, calF):
    return FormalSeries.lift(s0(ctx.model, ctx.T(_expi(ctx, calF))))


def _s_hat_polarized(ctx: Deformation, calF, factors):
    """s-hat_F of a product of even local factors, from the generating function.

    Z only acts on the local exponent, so s-hat_F(X1...Xn) is read off the
    t1...tn coefficient of i e^{iX} gen(F + X), X = sum t_k X_k.
    """
    names = _TS[:len(factors)]
    X = None
    for nm, f in zip(names, factors):
        term = FormalSeries.param(nm, 1) * f
        X = term if X is None else X + term
    base = FormalSeries.lift(calF)
    full = series_exp(X.scale(I)) * bv_generator(ctx, base + X).scale(I)
    for nm in names:
        full = full.drop(nm, 1)
    # coefficient of t1...tn in e^{iX} is i^n X1...Xn
    return full.scale(_ipow(-len(factors)))


def _ipow(n: int) -> Scalar:
    return (ONE, I, -ONE, -I)[n % 4]


def lap_calF(ctx: Deformation, calF, *factors):
    """lap_F = i(s-hat_F - s_F) on a product of even local factors."""
    sh = _s_hat_polarized(ctx, calF, factors)
    prod = factors[0]
    for f in factors[1:]:
        prod = prod * f
    return (sh - FormalSeries.lift(s_classical(ctx.model, calF, prod))).scale(I)


def check_laplace_product(ctx: Deformation, calF, X, Y) -> CheckResult:
    """lap_F(XY) = (lap_F X) Y + X (lap_F Y) + {X, Y} for even, at most linear X, Y."""
    for z in (X, Y):
        _require_even(z)
    qres = qme_residual(ctx, calF)
    if not qres.is_zero():
        r = CheckResult.from_residual("bv.laplace_product", qres)
        r.extra["qme_violated"] = True
        return r
    lhs = lap_calF(ctx, calF, X, Y)
    rhs = lap_calF(ctx, calF, X) * Y + X * lap_calF(ctx, calF, Y) + antibracket(X, Y)
    return CheckResult.from_residual("bv.laplace_product", FormalSeries.lift(lhs) - rhs)


def check_A_second_order(ctx: Deformation, calF, X, Y) -> CheckResult:
    """The lam*mu coefficient of A(F + lam X + mu Y) vanishes."""
    lam = FormalSeries.param("lam", 1)
    mu = FormalSeries.param("mu", 1)
    qres = qme_residual(ctx, calF)
    A = solve_bv_anomaly(ctx, FormalSeries.lift(calF) + lam * X + mu * Y)
    r = CheckResult.from_residual("bv.A_second_order", A.drop("lam", 1).drop("mu", 1))
    r.extra["qme_holds"] = qres.is_zero()
    return r


def check_closing_remark(X, Y) -> CheckResult:
    """d_X(lap Y) + d_Y(lap X) + lap{X, Y} = 0 for even X, Y, with d_X = {., X}.

    This is what lap^2 (XY) = 0 leaves once the product rule is expanded.
    """
    for z in (X, Y):
        _require_even(z)
    r = antibracket(laplacian(Y), X) + antibracket(laplacian(X), Y) + laplacian(antibracket(X, Y))
    return CheckResult.from_residual("bv.closing_remark", r)


def check_bv_implies_wz(ctx: Deformation, F, X: LieSymmetry, Y: LieSymmetry, terms: dict | None = None) -> CheckResult:
    """Insert F + d_X eta1 + d_Y eta2 into the BV consistency relation and read off eta1 eta2."""
    m = ctx.model
    e1, e2 = eta(1), eta(2)
    calF = FormalSeries.lift(F) + vector_field(X, m, 1) + vector_field(Y, m, 2)
    pieces = ccbv_pieces(ctx, calF)
    coef = {k: FormalSeries.lift(v).map(lambda p: p.coefficient_of_odd((e1, e2)))
            for k, v in pieces.items()}
    t = wz0_terms(ctx, X, Y, F) if terms is None else terms
    parts = (("part1", coef["bracket"], -(t["t3"] + t["t4"])),
             ("part2", coef["A_prime_half"], t["lhs"] - t["t5"] - t["t6"]),
             ("part3", coef["A_prime_A"], -(t["t1"] + t["t2"])))
    failures = [name for name, ours, theirs in parts if not (ours - theirs).is_zero()]
    dX = solve_anomaly(ctx, X, F)
    dY = solve_anomaly(ctx, Y, F)
    expected_A = -(dX * GradedPoly.var(e1)) - dY * GradedPoly.var(e2)
    if not (FormalSeries.lift(pieces["A"]) - expected_A).is_zero():
        failures.append("A(F)")
    total = coef["bracket"] + coef["A_prime_half"] + coef["A_prime_A"]
    r = CheckResult.from_residual("bv.bv_implies_wz", total)
    if failures:
        r.status = "fail"
        r.extra["failing_parts"] = failures
    return r


def anomaly_via_laplacian(ctx: Deformation, X: LieSymmetry, F) -> FormalSeries:
    """i lap_F(d_X eta) with eta read off on the right: the BV route to Delta X(F)."""
    val = lap_F(ctx, FormalSeries.lift(F), vector_field(X, ctx.model, 1))
    return FormalSeries.lift(val).map(lambda p: p.coefficient_of_odd((eta(1),))).scale(I)


def check_anomaly_routes(ctx: Deformation, X: LieSymmetry, F) -> CheckResult:
    """Delta X(F) from the Ward identity, from i lap_F d_X, and from -<A'(F), d_X> agree."""
    F = FormalSeries.lift(F)
    ward = solve_anomaly(ctx, X, F)
    lap = anomaly_via_laplacian(ctx, X, F)
    A = solve_bv_anomaly(ctx, F + vector_field(X, ctx.model, 1))
    via_A = -FormalSeries.lift(A).map(lambda p: p.coefficient_of_odd((eta(1),)))
    bad = [name for name, v in (("lap", lap), ("A", via_A)) if not (v - ward).is_zero()]
    r = CheckResult.from_residual("bv.anomaly_routes", (lap - ward) + (via_A - ward))
    if bad:
        r.extra["disagreeing_routes"] = bad
    return r
