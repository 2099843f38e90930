"""Counterterm maps Z = exp(z), the anomaly Delta X(F), and its cocycle checks.

The anomaly is solved from the Ward identity in the form

    Delta X(F) = d_X F + d_X L - Z^-1( e^{-iZF} T^-1 R ),
    R = sum_j T(e^{iZF} (phi X)_j) (M phi)_j,

i.e. the time-ordered product with e^{iF} is read through T o Z.  In the
plain context this gives the constant i * sum_x tr a(x).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from gmpy2 import mpq

from .galg import (
    I, ONE, ZERO, FormalSeries, GradedPoly, Scalar, as_scalar, field, series_exp,
)
from .deform import Deformation, FreeModel, as_series, lagrangian
from .sym import LieSymmetry, lie_bracket, partial_X, exp_path
from .report import CheckResult, residual_summary

__all__ = [
    "Kernel", "RenMap", "z_apply", "z_compose", "z_inverse", "lieR_bracket",
    "directional", "dX_on_z", "solve_anomaly", "anomaly_map", "check_AMWI",
    "wz0_terms", "check_extended_WZ", "check_lie_cocycle", "check_relation_q",
]


@dataclass(frozen=True)
class Kernel:
    """c * d^m / d phi_{a1}(x) ... d phi_{am}(x)."""

    order: int
    site: int
    comps: tuple
    coeff: Scalar

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("counterterm kernels need order >= 2")
        if len(self.comps) != self.order:
            raise ValueError("component multi-index length must equal the order")

    def apply(self, F: GradedPoly) -> GradedPoly:
        out = F
        for a in self.comps:
            out = out.dfield(field(self.site, a))
            if not out.terms:
                return out
        return out.scale(self.coeff)

    def to_json(self):
        return {"order": self.order, "site": self.site, "components": list(self.comps),
                "coefficient": self.coeff.to_json()}


class RenMap:
    """Z = exp(z) with z a finite sum of diagonal counterterm kernels.

    z lowers the field degree by at least two, so exp(z) terminates on
    polynomials and the series in the internal grading is exact.  All
    kernels commute, so composition just concatenates kernel lists.
    """

    def __init__(self, kernels: Iterable[Kernel] = ()):
        self.kernels = tuple(k for k in kernels if k.coeff)

    @classmethod
    def single(cls, order: int, site: int, comps: Sequence[int], coeff) -> "RenMap":
        return cls([Kernel(order, site, tuple(comps), as_scalar(coeff))])

    def is_identity(self) -> bool:
        return not self.kernels

    def support(self) -> frozenset:
        return frozenset(k.site for k in self.kernels)

    def z(self, F):
        """The Lie element z(F)."""
        if isinstance(F, FormalSeries):
            return F.map(self.z)
        out = GradedPoly()
        for k in self.kernels:
            out = out + k.apply(F)
        return out

    def _exp(self, F, sign: int):
        if isinstance(F, FormalSeries):
            return F.map(lambda c: self._exp(c, sign))
        out = F
        term = F
        j = 0
        while True:
            j += 1
            term = self.z(term).scale(Scalar(mpq(sign, j)))
            if not term.terms:
                return out
            out = out + term

    def apply(self, F):
        return F if not self.kernels else self._exp(F, 1)

    def apply_inverse(self, F):
        return F if not self.kernels else self._exp(F, -1)

    def compose(self, other: "RenMap") -> "RenMap":
        """Z1 o Z2."""
        return RenMap(self.kernels + other.kernels)

    def inverse(self) -> "RenMap":
        return RenMap(Kernel(k.order, k.site, k.comps, -k.coeff) for k in self.kernels)

    def to_json(self):
        return [k.to_json() for k in self.kernels]

    def __repr__(self):
        return f"RenMap({list(self.kernels)})"


def z_apply(Z: RenMap, F, K: int | None = None):
    """Z applied to F (a polynomial is scaled to eps*F through eps^K when K is given)."""
    if K is not None and not isinstance(F, FormalSeries):
        F = as_series(F, K)
    return Z.apply(F)


def z_compose(Z1: RenMap, Z2: RenMap) -> RenMap:
    return Z1.compose(Z2)


def z_inverse(Z: RenMap) -> RenMap:
    return Z.inverse()


_TAUS = ("tau", "tau2", "tau3")


def _fresh_tau(*objs) -> str:
    used = set()
    for o in objs:
        if isinstance(o, FormalSeries):
            used |= set(o.params)
    for t in _TAUS:
        if t not in used:
            return t
    raise RuntimeError("ran out of derivative parameters")


def directional(fn: Callable, F, G):
    """<fn'(F), G> = d/dtau fn(F + tau G) at tau = 0."""
    t = _fresh_tau(F, G)
    tau = FormalSeries.param(t, 1)
    val = fn(FormalSeries.lift(F) + tau * G)
    return FormalSeries.lift(val).drop(t, 1)


def lieR_bracket(z1: Callable, z2: Callable, F):
    """[z1, z2](F) = <z1'(F), z2(F)> - <z2'(F), z1(F)>."""
    return directional(z1, F, z2(F)) - directional(z2, F, z1(F))


def dX_on_z(X: LieSymmetry, z: Callable, F, model: FreeModel):
    """(d_X z)(F) = d_X(z(F)) - <z'(F), d_X(F + L)>."""
    L = lagrangian(model)
    return partial_X(X, z(F), model) - directional(z, F, partial_X(X, FormalSeries.lift(F) + L, model))


def solve_anomaly(ctx: Deformation, X: LieSymmetry, F, K: int | None = None) -> FormalSeries:
    """Delta X(F) from the anomalous Ward identity, exact through the caps of F."""
    m = ctx.model
    F = FormalSeries.lift(as_series(F, K) if K is not None else F)
    L = lagrangian(m)
    G = ctx.expi(F)
    phiX = X.phiX(m)
    R = None
    for j, v in enumerate(phiX):
        if not v.terms:
            continue
        part = ctx.T(G * ctx.z_apply(v)) * m.eom(j)
        R = part if R is None else R + part
    dXL = partial_X(X, L, m)
    if R is None:
        inner = FormalSeries.constant(0, F.params, F.caps)
    else:
        ginv = series_exp(FormalSeries.lift(ctx.z_apply(F)).scale(-I))
        inner = ctx.z_inverse(ginv * ctx.Tinv(R))
    return partial_X(X, F, m) + dXL - inner


def anomaly_map(ctx: Deformation, X: LieSymmetry) -> Callable:
    """F -> Delta X(F) as a plain callable (an element of Lie R)."""
    return lambda F: solve_anomaly(ctx, X, F)


def check_AMWI(ctx: Deformation, X: LieSymmetry, F, phi: Sequence, K: int | None = None,
               anomaly=None) -> CheckResult:
    """T-hat(e^{iF} (d_X F + d_X L_q - Delta X(F)))[phi] = 0 with q = M phi."""
    m = ctx.model
    F = FormalSeries.lift(as_series(F, K) if K is not None else F)
    delta = solve_anomaly(ctx, X, F) if anomaly is None else anomaly
    q = m.apply_M(phi)
    L = lagrangian(m)
    phiX = X.phiX(m)
    src = GradedPoly()
    for j, v in enumerate(phiX):
        if v.terms and q[j]:
            src = src + v.scale(q[j])
    dXLq = partial_X(X, L, m) - src
    body = partial_X(X, F, m) + dXLq - delta
    val = ctx.T(ctx.expi(F) * ctx.z_apply(body))
    val = val.map(lambda c: c.evaluate(m.config(phi)))
    return CheckResult.from_residual("rg.amwi", val)


def wz0_terms(ctx: Deformation, X: LieSymmetry, Y: LieSymmetry, F) -> dict:
    """The six right-hand terms of the extended consistency condition and the left side."""
    m = ctx.model
    L = lagrangian(m)
    F = FormalSeries.lift(F)
    DX, DY = anomaly_map(ctx, X), anomaly_map(ctx, Y)
    dx, dy = DX(F), DY(F)
    return {
        "lhs": solve_anomaly(ctx, lie_bracket(X, Y), F),
        "t1": directional(DY, F, dx),
        "t2": -directional(DX, F, dy),
        "t3": partial_X(X, dy, m),
        "t4": -partial_X(Y, dx, m),
        "t5": -directional(DY, F, partial_X(X, F + L, m)),
        "t6": directional(DX, F, partial_X(Y, F + L, m)),
    }


def _sum(parts):
    out = None
    for p in parts:
        out = p if out is None else out + p
    return out


def check_extended_WZ(ctx: Deformation, X: LieSymmetry, Y: LieSymmetry, F, K: int | None = None,
                      terms: dict | None = None) -> CheckResult:
    F = as_series(F, K) if K is not None else F
    t = wz0_terms(ctx, X, Y, F) if terms is None else terms
    rhs = _sum(t[k] for k in ("t1", "t2", "t3", "t4", "t5", "t6"))
    res = CheckResult.from_residual("wz.extended", t["lhs"] - rhs)
    res.extra["lhs_first_nonzero"] = residual_summary(t["lhs"])["first_nonzero"]
    res.extra["nonzero_terms"] = sorted(k for k, v in t.items() if not FormalSeries.lift(v).is_zero())
    return res


def check_lie_cocycle(ctx: Deformation, X: LieSymmetry, Y: LieSymmetry, F, K: int | None = None,
                      terms: dict | None = None) -> CheckResult:
    """Delta[X,Y] = -[Delta X, Delta Y] + (d_X Delta Y) - (d_Y Delta X), plus term matching."""
    m = ctx.model
    F = FormalSeries.lift(as_series(F, K) if K is not None else F)
    DX, DY = anomaly_map(ctx, X), anomaly_map(ctx, Y)
    br = lieR_bracket(DX, DY, F)
    dxy = dX_on_z(X, DY, F, m)
    dyx = dX_on_z(Y, DX, F, m)
    t = wz0_terms(ctx, X, Y, F) if terms is None else terms
    residual = t["lhs"] - (-br + dxy - dyx)
    res = CheckResult.from_residual("wz.lie", residual)
    mismatches = []
    if not (-br - (t["t1"] + t["t2"])).is_zero():
        mismatches.append("bracket vs t1+t2")
    if not (dxy - (t["t3"] + t["t5"])).is_zero():
        mismatches.append("d_X Delta Y vs t3+t5")
    if not (-dyx - (t["t4"] + t["t6"])).is_zero():
        mismatches.append("d_Y Delta X vs t4+t6")
    if mismatches:
        res.status = "fail"
        res.extra["term_mismatch"] = mismatches
    return res


def _eval_K(phis: Sequence[dict], coeffs: Sequence[int]) -> Callable:
    """A nonlinear test function K(F) = sum_i c_i F[phi_i]^(i+1)."""

    def K(F):
        F = FormalSeries.lift(F)
        out = FormalSeries.constant(0)
        for i, (phi, c) in enumerate(zip(phis, coeffs)):
            val = F.map(lambda p: p.evaluate(phi))
            out = out + (val ** (i + 1)).scale(c)
        return out
    return K


def check_relation_q(ctx: Deformation, X: LieSymmetry, Y: LieSymmetry, F, phis: Sequence[dict],
                     coeffs: Sequence[int] = (1, 1)) -> CheckResult:
    """q([X,Y]) = [q(X), q(Y)] + [r(X), q(Y)] - [r(Y), q(X)] on a test function K."""
    m = ctx.model
    L = lagrangian(m)
    F = FormalSeries.lift(F)
    K = _eval_K(phis, coeffs)

    def q(Z):
        D = anomaly_map(ctx, Z)
        return lambda Kf: (lambda G: directional(Kf, G, D(G)))

    def r(Z):
        return lambda Kf: (lambda G: directional(Kf, G, -partial_X(Z, FormalSeries.lift(G) + L, m)))

    def comm(A, B):
        return lambda Kf: (lambda G: A(B(Kf))(G) - B(A(Kf))(G))

    lhs = q(lie_bracket(X, Y))(K)(F)
    rhs = comm(q(X), q(Y))(K)(F) + comm(r(X), q(Y))(K)(F) - comm(r(Y), q(X))(K)(F)
    return CheckResult.from_residual("rg.relation_q", lhs - rhs)


def check_dX_on_z_two_ways(ctx: Deformation, X: LieSymmetry, z: Callable, F, cap: int = 1) -> CheckResult:
    """(d_X z)(F) against d/dlam g_* z(g_L^-1 F) at lam = 0, g = exp(lam X)."""
    m = ctx.model
    direct = dX_on_z(X, z, F, m)
    g = exp_path(X, m, cap)
    ginv = exp_path(X, m, cap, sign=-1)
    moved = g.pullback(z(ginv.gL(F)))
    via_path = FormalSeries.lift(moved).drop("lam", 1)
    return CheckResult.from_residual("rg.dX_on_z", direct - via_path)
