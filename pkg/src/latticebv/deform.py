"""Free lattice models, Wick ordering and (twisted) formal S-matrices."""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import sympy
from gmpy2 import mpq

from .galg import (
    ONE, ZERO, I, FormalSeries, GradedPoly, Scalar, VarId, as_scalar, field,
    series_exp, series_inv, _q,
)

__all__ = [
    "FreeModel", "Wick", "Deformation", "lagrangian", "wick_T", "wick_T_inv",
    "tprod", "smatrix", "twist", "as_series",
]


def _rat_matrix(rows) -> list[list[mpq]]:
    return [[_q(x) for x in row] for row in rows]


def _sympy(mat):
    return sympy.Matrix([[sympy.Rational(int(x.numerator), int(x.denominator)) for x in row] for row in mat])


def _from_sympy(mat) -> list[list[mpq]]:
    return [[mpq(int(sympy.fraction(x)[0]), int(sympy.fraction(x)[1])) for x in mat.row(i)] for i in range(mat.rows)]


class FreeModel:
    """Finite site set, internal dimension n, free action 1/2 phi^T M phi.

    Variables are ordered site-major: index = position(site) * n + component.
    The Feynman kernel is E = i M^-1, so M E = i Id.
    """

    def __init__(self, sites: Sequence[int], n: int, M, edges: Iterable | None = None,
                 mass2=None, name: str = ""):
        self.sites = tuple(sites)
        self.n = int(n)
        self.name = name
        self.edges = tuple(tuple(e) for e in edges) if edges else ()
        self.mass2 = None if mass2 is None else _q(mass2)
        if len(set(self.sites)) != len(self.sites):
            raise ValueError("duplicate sites")
        N = len(self.sites) * self.n
        self.M = _rat_matrix(M)
        if len(self.M) != N or any(len(r) != N for r in self.M):
            raise ValueError(f"M must be {N}x{N}")
        for j in range(N):
            for k in range(j):
                if self.M[j][k] != self.M[k][j]:
                    raise ValueError("M is not symmetric")
        for s, t in self.edges:
            if s not in self.sites or t not in self.sites:
                raise ValueError(f"edge ({s},{t}) refers to a missing site")
        sm = _sympy(self.M)
        if sm.det() == 0:
            raise ValueError("M is singular")
        self.Minv = _from_sympy(sm.inv())
        self.vars = tuple(field(x, a) for x in self.sites for a in range(self.n))
        self._pos = {v: j for j, v in enumerate(self.vars)}
        self.E = [[Scalar._raw(mpq(0), self.Minv[j][k]) for k in range(N)] for j in range(N)]
        self.wick = Wick(self.vars, self.E)
        self.wick_inv = Wick(self.vars, [[-e for e in row] for row in self.E])

    @classmethod
    def from_graph(cls, sites, n, edges, mass2, name=""):
        """M = (graph Laplacian + mass2) (x) Id_n."""
        sites = tuple(sites)
        pos = {x: i for i, x in enumerate(sites)}
        N = len(sites) * n
        M = [[mpq(0)] * N for _ in range(N)]
        m2 = _q(mass2)
        for x in sites:
            for a in range(n):
                M[pos[x] * n + a][pos[x] * n + a] += m2
        for s, t in edges:
            for a in range(n):
                js, jt = pos[s] * n + a, pos[t] * n + a
                M[js][js] += 1
                M[jt][jt] += 1
                M[js][jt] -= 1
                M[jt][js] -= 1
        return cls(sites, n, M, edges=edges, mass2=m2, name=name)

    @property
    def size(self) -> int:
        return len(self.vars)

    def index(self, v: VarId) -> int:
        return self._pos[field(v.site, v.comp)]

    def site_of(self, j: int) -> int:
        return self.vars[j].site

    def phi(self, j: int) -> GradedPoly:
        return GradedPoly.var(self.vars[j])

    def eom(self, j: int) -> GradedPoly:
        """(M phi)_j, the field equation of the free action."""
        row = self.M[j]
        return GradedPoly({(((self.vars[k], 1),), ()): Scalar._raw(row[k], mpq(0)) for k in range(self.size) if row[k]})

    def pairing(self, q: Sequence) -> GradedPoly:
        """<Phi, q> = sum_j q_j phi_j."""
        out = GradedPoly()
        for j, c in enumerate(q):
            out = out + GradedPoly.var(self.vars[j], c)
        return out

    def apply_M(self, phi: Sequence) -> list[Scalar]:
        vals = [as_scalar(x) for x in phi]
        return [sum((Scalar._raw(self.M[j][k], mpq(0)) * vals[k] for k in range(self.size)), ZERO)
                for j in range(self.size)]

    def config(self, values: Sequence) -> dict:
        return {v: as_scalar(x) for v, x in zip(self.vars, values)}

    def neighbors(self, sites: Iterable[int]) -> set:
        """Sites coupled through M to any of `sites`, including themselves."""
        sites = set(sites)
        out = set(sites)
        for j, v in enumerate(self.vars):
            if v.site in sites:
                for k in range(self.size):
                    if self.M[j][k]:
                        out.add(self.vars[k].site)
        return out

    def lagrangian(self, f: Mapping[int, object] | None = None) -> GradedPoly:
        return lagrangian(self, f)

    def __repr__(self):
        return f"FreeModel({self.name or 'unnamed'}, sites={len(self.sites)}, n={self.n})"


def lagrangian(m: FreeModel, f: Mapping[int, object] | None = None) -> GradedPoly:
    """L(f) = 1/2 sum_jk w_jk phi_j M_jk phi_k, w_jk = (f(x_j)+f(x_k))/2."""
    w = {x: (mpq(1) if f is None else _q(f.get(x, 0))) for x in m.sites}
    acc = {}
    for j in range(m.size):
        for k in range(m.size):
            c = m.M[j][k]
            if not c:
                continue
            wt = (w[m.site_of(j)] + w[m.site_of(k)]) / 2
            c = c * wt / 2
            if not c:
                continue
            a, b = m.vars[j], m.vars[k]
            key = (((a, 2),), ()) if a == b else (tuple(sorted(((a, 1), (b, 1)))), ())
            acc[key] = acc.get(key, mpq(0)) + c
    return GradedPoly({k: Scalar._raw(v, mpq(0)) for k, v in acc.items()})


class Wick:
    """exp(1/2 sum E_jk d_j d_k) on polynomials, memoized per even monomial.

    Uses T(phi_v G) = phi_v T(G) + sum_w E_vw T(d_w G); odd generators and
    field variables outside the model pass through unchanged.
    """

    def __init__(self, variables, E):
        self.vars = tuple(variables)
        self.pos = {v: j for j, v in enumerate(self.vars)}
        self.E = E
        self._memo = {(): {(): ONE}}

    def _mono(self, ev: tuple) -> dict:
        hit = self._memo.get(ev)
        if hit is not None:
            return hit
        v, e = ev[0]
        rest = ev[1:] if e == 1 else ((v, e - 1),) + ev[1:]
        out: dict = {}
        # phi_v * T(rest)
        for m, c in self._mono(rest).items():
            d = dict(m)
            d[v] = d.get(v, 0) + 1
            key = tuple(sorted(d.items()))
            out[key] = out.get(key, ZERO) + c
        j = self.pos[v]
        row = self.E[j]
        for w, ew in rest:
            c0 = row[self.pos[w]]
            if not c0:
                continue
            c0 = c0 * ew
            idx = [i for i, (u, _) in enumerate(rest) if u == w][0]
            smaller = rest[:idx] + rest[idx + 1:] if ew == 1 else rest[:idx] + ((w, ew - 1),) + rest[idx + 1:]
            for m, c in self._mono(smaller).items():
                out[m] = out.get(m, ZERO) + c0 * c
        out = {k: c for k, c in out.items() if c}
        self._memo[ev] = out
        return out

    def apply_poly(self, p: GradedPoly) -> GradedPoly:
        acc: dict = {}
        for (ev, od), c in p.terms.items():
            inside = tuple((v, e) for v, e in ev if v in self.pos)
            outside = tuple((v, e) for v, e in ev if v not in self.pos)
            for m, c2 in self._mono(inside).items():
                if outside:
                    d = dict(m)
                    for v, e in outside:
                        d[v] = e
                    m = tuple(sorted(d.items()))
                key = (m, od)
                val = c * c2
                prev = acc.get(key)
                acc[key] = val if prev is None else prev + val
        return GradedPoly(acc)

    def __call__(self, x):
        if isinstance(x, FormalSeries):
            return x.map(self.apply_poly)
        return self.apply_poly(x)


def wick_T(m: FreeModel, p):
    return m.wick(p)


def wick_T_inv(m: FreeModel, p):
    return m.wick_inv(p)


def tprod(m: FreeModel, F, G):
    """F ._T G = T(T^-1 F * T^-1 G)."""
    return m.wick(m.wick_inv(F) * m.wick_inv(G))


def as_series(F, order: int | None = None, param: str = "eps") -> FormalSeries:
    """A GradedPoly becomes param*F with the given cap; series pass through."""
    if isinstance(F, FormalSeries):
        return F
    if order is None:
        raise ValueError("a polynomial interaction needs an order cap")
    return FormalSeries.param(param, order, F)


class Deformation:
    """A time-ordered product T-hat = T o Z.  Z = None is the plain context."""

    def __init__(self, model: FreeModel, Z=None):
        self.model = model
        self.Z = Z

    @property
    def twisted(self) -> bool:
        return self.Z is not None and not self.Z.is_identity()

    def T(self, x):
        return self.model.wick(x)

    def Tinv(self, x):
        return self.model.wick_inv(x)

    def z_apply(self, x):
        return x if self.Z is None else self.Z.apply(x)

    def z_inverse(self, x):
        return x if self.Z is None else self.Z.apply_inverse(x)

    def expi(self, F) -> FormalSeries:
        """e^{i Z(F)} as a formal series."""
        return series_exp(FormalSeries.lift(self.z_apply(F)).scale(I))

    def smatrix(self, F) -> FormalSeries:
        """S-hat(F) = T e^{i Z F}."""
        return self.T(self.expi(F))

    def smatrix_inv(self, F) -> FormalSeries:
        """The ._T inverse of S-hat(F): T(e^{-i Z F})."""
        return self.T(series_exp(FormalSeries.lift(self.z_apply(F)).scale(-I)))

    def tprod(self, F, G):
        return tprod(self.model, F, G)

    def __repr__(self):
        return f"Deformation({self.model!r}, twisted={self.twisted})"


def smatrix(m: FreeModel | Deformation, F, K: int | None = None) -> FormalSeries:
    """S(F) = T e^{i eps F} through eps^K (or of a ready-made series)."""
    ctx = m if isinstance(m, Deformation) else Deformation(m)
    return ctx.smatrix(as_series(F, K))


def twist(m: FreeModel | Deformation, Z) -> Deformation:
    """S-hat = S o Z; twisting a twisted context composes the maps."""
    if isinstance(m, Deformation):
        if m.Z is None:
            return Deformation(m.model, Z)
        return Deformation(m.model, m.Z.compose(Z))
    return Deformation(m, Z)


def tprod_inverse(ctx: Deformation, S: FormalSeries) -> FormalSeries:
    """._T inverse of a series with invertible degree-0 part."""
    return ctx.T(series_inv(ctx.Tinv(S)))
