"""The group-level anomaly map zeta: ODE integration, the unitary identity, cocycle checks.

On these finite models Delta X(F) = c_X + B_X(F) with B_X linear, so every
zeta_g is affine.  A CocycleSeries stores zeta^-1 as an offset series plus
its images of field monomials (the probe basis), each a series in the path
parameter, and fills the table lazily.
"""

from __future__ import annotations

from typing import Callable, Sequence

from .deform import Deformation, as_series, lagrangian
from .galg import ONE, FormalSeries, GradedPoly
from .report import CheckResult
from .rg import solve_anomaly, wz0_terms
from .sym import GroupElement, LieSymmetry, SeriesAction, exp_path, lie_bracket

__all__ = [
    "AffineAnomaly", "CocycleSeries", "integrate_zeta", "closed_form_zeta",
    "conjugate_zeta", "check_zeta_identity", "check_zeta_derivative",
    "check_UAMWI", "check_group_cocycle", "check_q_independence",
    "check_zeta_support", "check_closed_form", "check_affine_anomaly",
    "check_element_cocycle", "check_cocycle_wz",
]


def _unit(params, caps, deg) -> FormalSeries:
    return FormalSeries(params, caps, {deg: GradedPoly.const(1)})


def _apply_linear(G, image: Callable[[tuple], FormalSeries]) -> FormalSeries:
    """Extend a map on monomials linearly over polynomial and series coefficients."""
    G = FormalSeries.lift(G)
    out = FormalSeries.constant(0)
    for deg, p in G.items():
        acc = None
        for (ev, od), c in p.sorted_terms():
            if od:
                raise ValueError("zeta acts on antifield-free functionals only")
            t = FormalSeries.lift(image(ev)).scale(c)
            acc = t if acc is None else acc + t
        if acc is not None:
            out = out + acc * _unit(G.params, G.caps, deg)
    return out


class AffineAnomaly:
    """Delta X = c_X + B_X, with B_X probed monomial by monomial through the solver."""

    def __init__(self, ctx: Deformation, X: LieSymmetry):
        self.ctx = ctx
        self.X = X
        self.const = solve_anomaly(ctx, X, FormalSeries.constant(0)).degree0()
        self._memo: dict = {}

    def linear_mono(self, ev: tuple) -> GradedPoly:
        hit = self._memo.get(ev)
        if hit is None:
            p = GradedPoly._wrap({(ev, ()): ONE})
            hit = solve_anomaly(self.ctx, self.X, FormalSeries.param("eps", 1, p)).coefficient(eps=1)
            self._memo[ev] = hit
        return hit

    def linear(self, p: GradedPoly) -> GradedPoly:
        out = GradedPoly()
        for (ev, od), c in p.terms.items():
            if od:
                raise ValueError("Delta acts on antifield-free functionals only")
            out = out + self.linear_mono(ev).scale(c)
        return out

    def __call__(self, G) -> FormalSeries:
        return FormalSeries.lift(G).map(self.linear) + self.const


def _picard(U0: FormalSeries, rhs: Callable, param: str, cap: int) -> FormalSeries:
    """U' = rhs(U), U(0) = U0; each sweep fixes one more order in `param`."""
    U0 = FormalSeries.lift(U0)
    U = U0
    for _ in range(cap):
        U = U0 + FormalSeries.lift(rhs(U)).antiderivative(param, cap)
    return U


class CocycleSeries:
    """zeta^-1 along the path lam -> exp(lam X) h, as an affine map on functionals.

    `base` is the CocycleSeries of h (None for h = e).  The pullbacks of the
    path element and of its inverse are kept as `k` and `kinv`.
    """

    def __init__(self, ctx: Deformation, X: LieSymmetry, cap: int, param: str = "lam",
                 base: "CocycleSeries | None" = None, degree_cap: int | None = None,
                 q: Sequence | None = None):
        m = ctx.model
        self.ctx, self.X, self.cap, self.param, self.base = ctx, X, cap, param, base
        self.degree_cap = degree_cap if degree_cap is not None else (base.degree_cap if base else None)
        g = exp_path(X, m, cap, param)
        ginv = exp_path(X, m, cap, param, sign=-1)
        if base is None:
            self.k, self.kinv = g, ginv
        else:
            self.k, self.kinv = g.then(base.k), base.kinv.then(ginv)
        self.order = cap + (base.order if base else 0)
        self.anomaly = AffineAnomaly(ctx, X)
        self._lin: dict = {}
        delta = FormalSeries.lift(self.k.delta_L())
        if q is not None:
            src = m.pairing(q)
            delta = delta - (FormalSeries.lift(self.k.pullback(src)) - src)
        self._delta = delta
        start = base.offset if base else FormalSeries.constant(0)
        B, kk, ki = self.anomaly, self.k, self.kinv
        self.offset = _picard(start, lambda U: -(ki.pullback(B(delta + kk.pullback(U)))), param, cap)

    def lin(self, ev: tuple) -> FormalSeries:
        """Linear part of zeta^-1 on the monomial with even part `ev`."""
        hit = self._lin.get(ev)
        if hit is not None:
            return hit
        deg = sum(e for _, e in ev)
        if self.degree_cap is not None and deg > self.degree_cap:
            raise ValueError(f"degree cap {self.degree_cap} exceeded by a degree-{deg} functional")
        mono = GradedPoly._wrap({(ev, ()): ONE})
        start = self.base.lin(ev) if self.base else FormalSeries.lift(mono)
        B, kk, ki = self.anomaly, self.k, self.kinv
        hit = _picard(start, lambda W: -(ki.pullback(FormalSeries.lift(kk.pullback(W)).map(B.linear))),
                      self.param, self.cap)
        self._lin[ev] = hit
        return hit

    def inverse_apply(self, F) -> FormalSeries:
        """zeta^-1 (F)."""
        return self.offset + _apply_linear(F, self.lin)

    def apply(self, F) -> FormalSeries:
        """zeta (F), by fixed-point inversion of the affine map."""
        F = FormalSeries.lift(F)
        V = F
        for _ in range(self.order + 1):
            V = F - (self.inverse_apply(V) - V)
        return V

    __call__ = apply

    def table(self) -> dict:
        """The probe table: offset and every monomial image computed so far."""
        return {"offset": self.offset,
                "images": {ev: self._lin[ev] for ev in sorted(self._lin)}}

    def to_json(self):
        t = self.table()
        return {"offset": t["offset"].to_json(),
                "images": [{"monomial": GradedPoly._wrap({(ev, ()): ONE}).to_json(), "image": s.to_json()}
                           for ev, s in t["images"].items()]}


def integrate_zeta(ctx: Deformation, X: LieSymmetry, cap: int, param: str = "lam",
                   base: CocycleSeries | None = None, degree_cap: int | None = None,
                   q: Sequence | None = None) -> CocycleSeries:
    return CocycleSeries(ctx, X, cap, param, base, degree_cap, q)


def _actions(model, h):
    if isinstance(h, CocycleSeries):
        return h.k, h.kinv
    if isinstance(h, GroupElement):
        return SeriesAction.from_group(model, h), SeriesAction.from_group(model, h.inverse())
    if isinstance(h, tuple):
        return h
    raise TypeError("expected a path, a group element or a pair of actions")


def closed_form_zeta(ctx: Deformation, g, const=None) -> Callable:
    """zeta_g = Z^-1 g_L^-1 Z g_L + C_g.

    C_g is the untwisted constant.  For a rational group element it is 0,
    which needs det A(x) = 1 at every site; for a path pass it in.
    """
    if isinstance(g, GroupElement) and const is None:
        bad = [x for x, a in g.A.items() if GroupElement(g.n, {x: a}).det() != 1]
        if bad:
            raise ValueError(f"closed form needs det A(x) = 1; fails at sites {sorted(bad)}")
    act, inv = _actions(ctx.model, g)
    c = FormalSeries.constant(0) if const is None else FormalSeries.lift(const)

    def zeta(F):
        return FormalSeries.lift(ctx.z_inverse(inv.gL(ctx.z_apply(act.gL(F))))) + c
    return zeta


def conjugate_zeta(ctx: Deformation, zeta: Callable, h, F) -> FormalSeries:
    """zeta^h (F) = h_L^-1 zeta h_L (F)."""
    act, inv = _actions(ctx.model, h)
    return FormalSeries.lift(inv.gL(zeta(act.gL(F))))


# -- checks ------------------------------------------------------------------

def check_affine_anomaly(ctx: Deformation, X: LieSymmetry, probes: Sequence[GradedPoly]) -> CheckResult:
    """Delta X(eps P) = c_X + eps B_X(P) with nothing at eps^2, for each probe P."""
    A = AffineAnomaly(ctx, X)
    res = FormalSeries.constant(0)
    for p in probes:
        full = solve_anomaly(ctx, X, FormalSeries.param("eps", 2, p))
        res = res + (full - (FormalSeries.param("eps", 2, A.linear(p)) + A.const))
    return CheckResult.from_residual("cocycle.affine", res)


def check_zeta_identity(ctx: Deformation, X: LieSymmetry, F, cap: int = 3) -> CheckResult:
    """zeta at lam = 0 is the identity, and the X = 0 path gives the identity."""
    z = integrate_zeta(ctx, X, cap)
    at0 = z.apply(F).drop("lam", 0) - F
    trivial = integrate_zeta(ctx, LieSymmetry(X.n), cap).apply(F) - F
    return CheckResult.from_residual("cocycle.identity", at0 + trivial)


def check_zeta_derivative(ctx: Deformation, X: LieSymmetry, F, cap: int = 3) -> CheckResult:
    """d/dlam at 0 of zeta_{exp(lam X)}(F) equals Delta X(F)."""
    z = integrate_zeta(ctx, X, cap)
    d1 = z.apply(F).drop("lam", 1)
    return CheckResult.from_residual("cocycle.derivative", d1 - solve_anomaly(ctx, X, F))


def _source_gL(act: SeriesAction, F, q_poly: GradedPoly):
    """g_{L_q} F with L_q = L - <Phi, q>."""
    L = lagrangian(act.model)
    Lq = L - q_poly
    return FormalSeries.lift(act.pullback(Lq)) - Lq + FormalSeries.lift(act.pullback(F))


def check_UAMWI(ctx: Deformation, X: LieSymmetry, F, phi: Sequence, K: int = 3,
                K_lam: int = 3) -> CheckResult:
    """S(g_{L_q} F)[phi] = S(zeta_g F)[phi] at q = M phi, as joint (eps, lam) series."""
    m = ctx.model
    F = as_series(F, K)
    q = m.apply_M(phi)
    conf = m.config(phi)
    z = integrate_zeta(ctx, X, K_lam)
    lhs = ctx.smatrix(_source_gL(z.k, F, m.pairing(q))).map(lambda p: p.evaluate(conf))
    rhs = ctx.smatrix(z.apply(F)).map(lambda p: p.evaluate(conf))
    return CheckResult.from_residual("cocycle.uamwi", lhs - rhs)


def check_group_cocycle(ctx: Deformation, X: LieSymmetry, Y: LieSymmetry, F,
                        caps: tuple = (3, 3)) -> CheckResult:
    """zeta_{gh} = zeta_h h_L^-1 zeta_g h_L with g = exp(lam X), h = exp(mu Y).

    The left side integrates along e -> h -> g h.
    """
    zh = integrate_zeta(ctx, Y, caps[1], "mu")
    zg = integrate_zeta(ctx, X, caps[0], "lam")
    zgh = integrate_zeta(ctx, X, caps[0], "lam", base=zh)
    lhs = zgh.apply(F)
    rhs = zh.apply(conjugate_zeta(ctx, zg.apply, zh, F))
    return CheckResult.from_residual("cocycle.group", lhs - rhs)


def check_q_independence(ctx: Deformation, X: LieSymmetry, F, q1: Sequence, q2: Sequence,
                         cap: int = 3) -> CheckResult:
    """The probe tables built with sources q1 and q2 serialize identically."""
    tabs = []
    for q in (q1, q2):
        z = integrate_zeta(ctx, X, cap, q=q)
        z.inverse_apply(F)
        tabs.append(z.to_json())
    return CheckResult.from_bool("cocycle.q_independence", tabs[0] == tabs[1])


def check_zeta_support(ctx: Deformation, zeta: Callable, F, G, h=None) -> CheckResult:
    """zeta(F + G) = zeta(F) + G for G supported away from zeta (conjugated by h if given)."""
    if h is None:
        res = zeta(FormalSeries.lift(F) + G) - zeta(F) - G
    else:
        res = (conjugate_zeta(ctx, zeta, h, FormalSeries.lift(F) + G)
               - conjugate_zeta(ctx, zeta, h, F) - G)
    return CheckResult.from_residual("cocycle.support", res)


def check_closed_form(ctx: Deformation, X: LieSymmetry, F, cap: int = 3) -> CheckResult:
    """integrate_zeta agrees with Z^-1 g_L^-1 Z g_L plus the untwisted constant."""
    z = integrate_zeta(ctx, X, cap)
    plain = integrate_zeta(Deformation(ctx.model), X, cap)
    const = plain.apply(FormalSeries.constant(0))
    closed = closed_form_zeta(ctx, z, const)
    return CheckResult.from_residual("cocycle.closed_form", z.apply(F) - closed(F))


def check_element_cocycle(ctx: Deformation, g: GroupElement, h: GroupElement, F) -> CheckResult:
    """The cocycle relation for rational elements (permutations allowed) via the closed form."""
    zg, zh = closed_form_zeta(ctx, g), closed_form_zeta(ctx, h)
    zgh = closed_form_zeta(ctx, g * h)
    res = zgh(F) - zh(conjugate_zeta(ctx, zg, h, F))
    return CheckResult.from_residual("cocycle.element", res)


def check_cocycle_wz(ctx: Deformation, X: LieSymmetry, Y: LieSymmetry, F) -> CheckResult:
    """The lam*mu part of zeta_{g h} - zeta_{h g} is Delta[X,Y](F), and equals the six-term sum."""
    zg, zh = integrate_zeta(ctx, X, 1, "lam"), integrate_zeta(ctx, Y, 1, "mu")
    gh = integrate_zeta(ctx, X, 1, "lam", base=zh).apply(F)
    hg = integrate_zeta(ctx, Y, 1, "mu", base=zg).apply(F)
    d = (gh - hg).drop("lam", 1).drop("mu", 1)
    t = wz0_terms(ctx, X, Y, F)
    six = t["t1"] + t["t2"] + t["t3"] + t["t4"] + t["t5"] + t["t6"]
    res = (d - solve_anomaly(ctx, lie_bracket(X, Y), F)) + (d - six)
    return CheckResult.from_residual("cocycle.wz", res)
