"""Affine field redefinitions, site permutations and their Lie algebra.

Configurations are row vectors per site; a group element acts by
(g phi)(x) = phi(rho(x)) A(x) + psi(x).  With (g h)_* = g_* h_* the
composite acts as (g h) phi = h(g phi), matching the block-matrix product
[[A, 0], [psi, 1]] of the row representation.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import sympy
from gmpy2 import mpq

from .galg import (
    ONE, ZERO, FormalSeries, GradedPoly, Scalar, VarId, as_scalar, field, _q,
)
from .deform import FreeModel, lagrangian

__all__ = [
    "LieSymmetry", "GroupElement", "SeriesAction", "act_config", "pullback",
    "gL_action", "delta_gL", "lie_bracket", "partial_X", "partial_X_L",
    "exp_path", "substitute_fields",
]


def _mat(rows, n) -> tuple:
    m = tuple(tuple(_q(x) for x in row) for row in rows)
    if len(m) != n or any(len(r) != n for r in m):
        raise ValueError(f"expected an {n}x{n} matrix")
    return m


def _vec(v, n) -> tuple:
    out = tuple(_q(x) for x in v)
    if len(out) != n:
        raise ValueError(f"expected a length-{n} vector")
    return out


def _eye(n):
    return tuple(tuple(mpq(1) if i == j else mpq(0) for j in range(n)) for i in range(n))


def _zero(n):
    return tuple(tuple(mpq(0) for _ in range(n)) for _ in range(n))


def _mm(a, b):
    n = len(a)
    return tuple(tuple(sum((a[i][k] * b[k][j] for k in range(n)), mpq(0)) for j in range(n)) for i in range(n))


def _vm(v, a):
    n = len(a)
    return tuple(sum((v[k] * a[k][j] for k in range(n)), mpq(0)) for j in range(n))


def _madd(a, b, s=1):
    return tuple(tuple(x + s * y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def _minv(a):
    m = sympy.Matrix([[sympy.Rational(int(x.numerator), int(x.denominator)) for x in r] for r in a])
    if m.det() == 0:
        raise ValueError("matrix is not invertible")
    inv = m.inv()
    return tuple(tuple(mpq(int(sympy.fraction(inv[i, j])[0]), int(sympy.fraction(inv[i, j])[1]))
                       for j in range(m.cols)) for i in range(m.rows))


def _mdet(a):
    m = sympy.Matrix([[sympy.Rational(int(x.numerator), int(x.denominator)) for x in r] for r in a])
    d = m.det()
    return mpq(int(sympy.fraction(d)[0]), int(sympy.fraction(d)[1]))


class LieSymmetry:
    """X = (a, p): phi X = phi a + p per site.  Off the support a = 0, p = 0."""

    def __init__(self, n: int, a: Mapping | None = None, p: Mapping | None = None):
        self.n = n
        self.a = {x: _mat(m, n) for x, m in (a or {}).items()}
        self.p = {x: _vec(v, n) for x, v in (p or {}).items()}
        self.a = {x: m for x, m in self.a.items() if any(any(r) for r in m)}
        self.p = {x: v for x, v in self.p.items() if any(v)}

    def support(self) -> frozenset:
        return frozenset(self.a) | frozenset(self.p)

    def is_zero(self) -> bool:
        return not self.a and not self.p

    def __add__(self, o: "LieSymmetry") -> "LieSymmetry":
        a = dict(self.a)
        for x, m in o.a.items():
            a[x] = _madd(a.get(x, _zero(self.n)), m)
        p = dict(self.p)
        for x, v in o.p.items():
            p[x] = tuple(s + t for s, t in zip(p.get(x, (mpq(0),) * self.n), v))
        return LieSymmetry(self.n, a, p)

    def scale(self, c) -> "LieSymmetry":
        c = _q(c)
        return LieSymmetry(self.n, {x: tuple(tuple(c * e for e in r) for r in m) for x, m in self.a.items()},
                           {x: tuple(c * e for e in v) for x, v in self.p.items()})

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, o):
        return self + (-o)

    def __eq__(self, o):
        return isinstance(o, LieSymmetry) and self.n == o.n and self.a == o.a and self.p == o.p

    def __hash__(self):
        return hash((self.n, tuple(sorted(self.a.items())), tuple(sorted(self.p.items()))))

    def trace(self) -> mpq:
        """sum_x tr a(x), the divergence of the linear part."""
        return sum((m[i][i] for m in self.a.values() for i in range(self.n)), mpq(0))

    def phiX(self, model: FreeModel) -> list[GradedPoly]:
        """(phi X)_j for every model variable j."""
        out = []
        for v in model.vars:
            x, b = v.site, v.comp
            terms = {}
            if x in self.a:
                for c in range(self.n):
                    e = self.a[x][c][b]
                    if e:
                        terms[(((field(x, c), 1),), ())] = Scalar._raw(e, mpq(0))
            if x in self.p and self.p[x][b]:
                terms[((), ())] = Scalar._raw(self.p[x][b], mpq(0))
            out.append(GradedPoly(terms))
        return out

    def to_json(self):
        return {
            "a": {str(x): [[f"{e.numerator}/{e.denominator}" for e in r] for r in m] for x, m in sorted(self.a.items())},
            "p": {str(x): [f"{e.numerator}/{e.denominator}" for e in v] for x, v in sorted(self.p.items())},
        }

    def __repr__(self):
        return f"LieSymmetry(a={self.a}, p={self.p})"


def lie_bracket(X: LieSymmetry, Y: LieSymmetry) -> LieSymmetry:
    """[(a,p),(b,q)] = ([a,b], p b - q a)."""
    n = X.n
    sites = X.support() | Y.support()
    a, p = {}, {}
    z, zv = _zero(n), (mpq(0),) * n
    for x in sites:
        ax, bx = X.a.get(x, z), Y.a.get(x, z)
        a[x] = _madd(_mm(ax, bx), _mm(bx, ax), -1)
        px, qx = X.p.get(x, zv), Y.p.get(x, zv)
        p[x] = tuple(s - t for s, t in zip(_vm(px, bx), _vm(qx, ax)))
    return LieSymmetry(n, a, p)


def _derive_along(F, model: FreeModel, vec: Sequence[GradedPoly]):
    if isinstance(F, FormalSeries):
        return F.map(lambda c: _derive_along(c, model, vec))
    out = GradedPoly()
    for j, v in enumerate(model.vars):
        if vec[j].terms:
            d = F.dfield(v)
            if d.terms:
                out = out + d * vec[j]
    return out


def partial_X(X: LieSymmetry, F, model: FreeModel):
    """d_X F = <F'(phi), phi X>."""
    return _derive_along(F, model, X.phiX(model))


def partial_X_L(X: LieSymmetry, m: FreeModel) -> GradedPoly:
    return partial_X(X, lagrangian(m), m)


def substitute_fields(F, images: Mapping[VarId, object]):
    """Replace field variables by polynomials or formal series."""
    if not images:
        return F
    if not any(isinstance(v, FormalSeries) for v in images.values()):
        if isinstance(F, FormalSeries):
            return F.map(lambda c: c.substitute(images))
        return F.substitute(images)
    if isinstance(F, FormalSeries):
        out = None
        for deg, c in F.coeffs.items():
            mono = FormalSeries(F.params, F.caps, {deg: GradedPoly.const(1)})
            term = substitute_fields(c, images) * mono
            out = term if out is None else out + term
        return out if out is not None else FormalSeries(F.params, F.caps)
    powers: dict = {}

    def power(v, e):
        if (v, e) not in powers:
            powers[(v, e)] = images[v] if e == 1 else power(v, e - 1) * images[v]
        return powers[(v, e)]

    out = FormalSeries.constant(0)
    for (ev, od), c in F.terms.items():
        kept = []
        acc = FormalSeries.constant(GradedPoly._wrap({((), od): c}))
        for v, e in ev:
            if v in images:
                acc = acc * FormalSeries.lift(power(v, e))
            else:
                kept.append((v, e))
        if kept:
            acc = acc * GradedPoly._wrap({(tuple(kept), ()): ONE})
        out = out + acc
    return out


class GroupElement:
    """g = (A, psi, rho) with finite support."""

    def __init__(self, n: int, A: Mapping | None = None, psi: Mapping | None = None,
                 rho: Mapping | None = None):
        self.n = n
        eye = _eye(n)
        self.A = {x: _mat(m, n) for x, m in (A or {}).items()}
        self.A = {x: m for x, m in self.A.items() if m != eye}
        for m in self.A.values():
            if not _mdet(m):
                raise ValueError("A(x) must be invertible")
        self.psi = {x: _vec(v, n) for x, v in (psi or {}).items() if any(_q(e) for e in v)}
        self.rho = {int(x): int(y) for x, y in (rho or {}).items() if int(x) != int(y)}
        if sorted(self.rho) != sorted(self.rho.values()):
            raise ValueError("rho is not a permutation")

    @classmethod
    def identity(cls, n: int) -> "GroupElement":
        return cls(n)

    def support(self) -> frozenset:
        return frozenset(self.A) | frozenset(self.psi) | frozenset(self.rho)

    def is_identity(self) -> bool:
        return not self.support()

    def A_at(self, x):
        return self.A.get(x, _eye(self.n))

    def psi_at(self, x):
        return self.psi.get(x, (mpq(0),) * self.n)

    def rho_at(self, x):
        return self.rho.get(x, x)

    def __mul__(self, h: "GroupElement") -> "GroupElement":
        """g*h, acting as (g h) phi = h(g phi)."""
        g = self
        sites = g.support() | h.support()
        A, psi, rho = {}, {}, {}
        for x in sites:
            hx = h.rho_at(x)
            rho[x] = g.rho_at(hx)
            A[x] = _mm(g.A_at(hx), h.A_at(x))
            psi[x] = tuple(s + t for s, t in zip(_vm(g.psi_at(hx), h.A_at(x)), h.psi_at(x)))
        return GroupElement(self.n, A, psi, rho)

    def inverse(self) -> "GroupElement":
        # solve g * k = e: rho_g(rho_k(x)) = x, A_g(rho_k x) A_k(x) = Id, psi_g(rho_k x) A_k(x) + psi_k(x) = 0
        inv_rho = {y: x for x, y in self.rho.items()}
        A, psi, rho = {}, {}, {}
        for x in self.support():
            kx = inv_rho.get(x, x)
            rho[x] = kx
            A[x] = _minv(self.A_at(kx))
            psi[x] = tuple(-e for e in _vm(self.psi_at(kx), A[x]))
        return GroupElement(self.n, A, psi, rho)

    def __eq__(self, o):
        return (isinstance(o, GroupElement) and self.n == o.n and self.A == o.A
                and self.psi == o.psi and self.rho == o.rho)

    def __hash__(self):
        return hash((self.n, tuple(sorted(self.A.items())), tuple(sorted(self.psi.items())),
                     tuple(sorted(self.rho.items()))))

    def det(self) -> mpq:
        """Jacobian determinant of phi -> g phi (up to the permutation sign)."""
        out = mpq(1)
        for m in self.A.values():
            out *= _mdet(m)
        return out

    def images(self, model: FreeModel) -> dict:
        """phi_b(x) -> sum_a phi_a(rho x) A(x)_ab + psi(x)_b."""
        out = {}
        for x in self.support():
            A, ps, y = self.A_at(x), self.psi_at(x), self.rho_at(x)
            for b in range(self.n):
                terms = {}
                for a in range(self.n):
                    if A[a][b]:
                        terms[(((field(y, a), 1),), ())] = Scalar._raw(A[a][b], mpq(0))
                if ps[b]:
                    terms[((), ())] = Scalar._raw(ps[b], mpq(0))
                out[field(x, b)] = GradedPoly(terms)
        return out

    def to_json(self):
        f = lambda e: f"{e.numerator}/{e.denominator}"
        return {
            "A": {str(x): [[f(e) for e in r] for r in m] for x, m in sorted(self.A.items())},
            "psi": {str(x): [f(e) for e in v] for x, v in sorted(self.psi.items())},
            "rho": {str(x): y for x, y in sorted(self.rho.items())},
        }

    def __repr__(self):
        return f"GroupElement(A={self.A}, psi={self.psi}, rho={self.rho})"


def act_config(g: GroupElement, phi: Mapping[VarId, object]) -> dict:
    """(g phi)(x) = phi(rho x) A(x) + psi(x) on a full configuration."""
    vals = {v: as_scalar(c) for v, c in phi.items()}
    out = dict(vals)
    for x in g.support():
        A, ps, y = g.A_at(x), g.psi_at(x), g.rho_at(x)
        for b in range(g.n):
            acc = Scalar(ps[b])
            for a in range(g.n):
                if A[a][b]:
                    acc = acc + vals[field(y, a)] * Scalar._raw(A[a][b], mpq(0))
            out[field(x, b)] = acc
    return out


class SeriesAction:
    """Pullback by a (possibly parameter-dependent) affine substitution.

    `images[v]` is the image of the field variable v, a GradedPoly or
    FormalSeries of degree <= 1 in the fields.  Variables not listed are
    fixed.
    """

    def __init__(self, model: FreeModel, images: Mapping):
        self.model = model
        self.images = dict(images)

    @classmethod
    def from_group(cls, model: FreeModel, g: GroupElement) -> "SeriesAction":
        return cls(model, g.images(model))

    def pullback(self, F):
        return substitute_fields(F, self.images)

    def delta_L(self, f=None):
        L = lagrangian(self.model, f)
        return self.pullback(L) - L

    def gL(self, F, f=None):
        return self.delta_L(f) + self.pullback(F)

    def then(self, h: "SeriesAction") -> "SeriesAction":
        """The composite g*h (self = g): pullback = g_* h_*."""
        imgs = {}
        for v in set(self.images) | set(h.images):
            hv = h.images.get(v, GradedPoly.var(v))
            imgs[v] = substitute_fields(hv, self.images)
        return SeriesAction(self.model, imgs)


def pullback(g: GroupElement, F, model: FreeModel):
    """g_* F [phi] = F[g phi]."""
    return substitute_fields(F, g.images(model))


def delta_gL(g: GroupElement, model: FreeModel, f: Mapping | None = None):
    """delta_g L = g_* L(f) - L(f); f defaults to 1 everywhere."""
    L = lagrangian(model, f)
    return pullback(g, L, model) - L


def gL_action(g: GroupElement, F, model: FreeModel, f: Mapping | None = None):
    return delta_gL(g, model, f) + pullback(g, F, model)


def admissible_cutoff(g: GroupElement, model: FreeModel) -> dict:
    """Indicator of supp(g) widened by one M-coupling step."""
    sites = model.neighbors(g.support())
    return {x: (1 if x in sites else 0) for x in model.sites}


def exp_path(X: LieSymmetry, model: FreeModel, cap: int, param: str = "lam", sign: int = 1) -> SeriesAction:
    """Pullback by g^lam = exp(sign*lam*X) as exact lam-series.

    With N = [[a, 0], [p, 0]], N^k = [[a^k, 0], [p a^(k-1), 0]], so
    A^lam = sum lam^k a^k / k! and psi^lam = sum_{k>=1} lam^k p a^(k-1) / k!.
    """
    n = X.n
    images = {}
    for x in X.support():
        a = X.a.get(x, _zero(n))
        p = X.p.get(x, (mpq(0),) * n)
        if sign < 0:
            a = tuple(tuple(-e for e in r) for r in a)
            p = tuple(-e for e in p)
        powers = [_eye(n)]
        for _ in range(cap):
            powers.append(_mm(powers[-1], a))
        fact = 1
        Acoef = {0: _eye(n)}
        Pcoef = {}
        for k in range(1, cap + 1):
            fact *= k
            Acoef[k] = tuple(tuple(e / fact for e in r) for r in powers[k])
            Pcoef[k] = tuple(e / fact for e in _vm(p, powers[k - 1]))
        for b in range(n):
            coeffs = {}
            for k in range(cap + 1):
                terms = {}
                for c in range(n):
                    e = Acoef[k][c][b]
                    if e:
                        terms[(((field(x, c), 1),), ())] = Scalar._raw(e, mpq(0))
                if k and Pcoef[k][b]:
                    terms[((), ())] = Scalar._raw(Pcoef[k][b], mpq(0))
                if terms:
                    coeffs[(k,)] = GradedPoly(terms)
            images[field(x, b)] = FormalSeries((param,), (cap,), coeffs)
    return SeriesAction(model, images)
