"""Exact graded-commutative polynomials and truncated formal series.

Coefficients are Gaussian rationals.  Even generators are field values
phi_x^a; odd generators are antifields and the auxiliary multipliers used
to turn odd objects into even ones.  A monomial is stored canonically as

    (even part, odd part) = (((v, e), ...), (w1, w2, ...))

with both parts sorted by variable.  Reordering the odd part into sorted
order costs a sign, which is folded into the coefficient.
"""

from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction
from itertools import product as _cartesian
from typing import Iterable, Mapping, NamedTuple

from gmpy2 import mpq

__all__ = [
    "Scalar", "ZERO", "ONE", "I", "as_scalar", "VarId", "FIELD", "ANTIFIELD",
    "MULTIPLIER", "field", "antifield", "eta", "GradedPoly", "FormalSeries",
    "gmul", "dfield", "dodd_left", "dodd_right", "support",
    "series_exp", "series_log", "series_inv", "PARAM_ORDER",
]


def _q(x) -> mpq:
    if isinstance(x, str):
        x = x.strip()
        if "/" in x:
            p, r = x.split("/")
            return mpq(int(p), int(r))
        return mpq(Fraction(x))
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


class Scalar:
    """Gaussian rational re + i*im."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is type(_ZQ) else _q(re)
        self.im = im if type(im) is type(_ZQ) else _q(im)

    @staticmethod
    def _raw(re, im):
        s = object.__new__(Scalar)
        s.re = re
        s.im = im
        return s

    def __add__(self, o):
        o = as_scalar(o)
        return Scalar._raw(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = as_scalar(o)
        return Scalar._raw(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        return as_scalar(o) - self

    def __neg__(self):
        return Scalar._raw(-self.re, -self.im)

    def __mul__(self, o):
        o = as_scalar(o)
        if not self.im and not o.im:
            return Scalar._raw(self.re * o.re, _ZQ)
        return Scalar._raw(self.re * o.re - self.im * o.im,
                           self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        n = self.re * self.re + self.im * self.im
        if not n:
            raise ZeroDivisionError("inverse of zero scalar")
        return Scalar._raw(self.re / n, -self.im / n)

    def __truediv__(self, o):
        return self * as_scalar(o).inverse()

    def __rtruediv__(self, o):
        return as_scalar(o) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> "Scalar":
        return Scalar._raw(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, o):
        try:
            o = as_scalar(o)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def is_real(self) -> bool:
        return not self.im

    def __repr__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"

    def to_json(self):
        return {"re": _qstr(self.re), "im": _qstr(self.im)}

    @classmethod
    def from_json(cls, obj) -> "Scalar":
        if isinstance(obj, Mapping):
            return cls(obj.get("re", 0), obj.get("im", 0))
        return cls(obj)


def _qstr(q: mpq) -> str:
    return f"{q.numerator}/{q.denominator}"


_ZQ = mpq(0)
ZERO = Scalar._raw(mpq(0), mpq(0))
ONE = Scalar._raw(mpq(1), mpq(0))
I = Scalar._raw(mpq(0), mpq(1))


def as_scalar(x) -> Scalar:
    if isinstance(x, Scalar):
        return x
    if isinstance(x, complex):
        raise TypeError("floating complex values are not exact")
    if isinstance(x, float):
        raise TypeError("floats are not exact; pass a Fraction or string")
    if isinstance(x, (int, Fraction, str)) or type(x) is type(_ZQ):
        return Scalar._raw(_q(x), _ZQ)
    raise TypeError(f"cannot interpret {x!r} as a scalar")


FIELD, ANTIFIELD, MULTIPLIER = 0, 1, 2
_KIND_NAMES = {FIELD: "field", ANTIFIELD: "antifield", MULTIPLIER: "multiplier"}


class VarId(NamedTuple):
    """A generator.  For multipliers `site` is the generator index."""

    kind: int
    site: int
    comp: int = 0

    @property
    def odd(self) -> bool:
        return self.kind != FIELD

    @property
    def kind_name(self) -> str:
        return _KIND_NAMES[self.kind]

    def partner(self) -> "VarId":
        if self.kind == FIELD:
            return VarId(ANTIFIELD, self.site, self.comp)
        if self.kind == ANTIFIELD:
            return VarId(FIELD, self.site, self.comp)
        raise ValueError("multipliers have no partner")

    def __str__(self):
        tail = f"{self.site}" if not self.comp else f"{self.site}.{self.comp}"
        if self.kind == FIELD:
            return f"phi{tail}"
        if self.kind == ANTIFIELD:
            return f"phi#{tail}"
        return f"eta{self.site}"


def field(site: int, comp: int = 0) -> VarId:
    return VarId(FIELD, site, comp)


def antifield(site: int, comp: int = 0) -> VarId:
    return VarId(ANTIFIELD, site, comp)


def eta(k: int) -> VarId:
    return VarId(MULTIPLIER, k, 0)


_EMPTY = ((), ())


def _merge_even(a, b):
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def _merge_odd(a, b):
    """Return (sign, merged) or (0, None) when a generator repeats."""
    if not a:
        return 1, b
    if not b:
        return 1, a
    inv = 0
    for y in b:
        k = bisect_right(a, y)
        if k and a[k - 1] == y:
            return 0, None
        inv += len(a) - k
    return (-1 if inv & 1 else 1), tuple(sorted(a + b))


def _sort_odd(seq):
    """Sign of sorting a sequence of odd generators (0 if a repeat)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0, None
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign, tuple(sorted(seq))


class GradedPoly:
    """Sparse element of the free graded-commutative algebra."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None):
        self.terms = {k: v for k, v in terms.items() if v} if terms else {}

    @staticmethod
    def _wrap(terms: dict) -> "GradedPoly":
        p = object.__new__(GradedPoly)
        p.terms = terms
        return p

    # -- constructors -------------------------------------------------
    @classmethod
    def const(cls, c) -> "GradedPoly":
        c = as_scalar(c)
        return cls._wrap({_EMPTY: c} if c else {})

    @classmethod
    def var(cls, v: VarId, coeff=1) -> "GradedPoly":
        c = as_scalar(coeff)
        if not c:
            return cls._wrap({})
        mono = ((), (v,)) if v.odd else (((v, 1),), ())
        return cls._wrap({mono: c})

    @classmethod
    def monomial(cls, factors: Iterable[VarId], coeff=1) -> "GradedPoly":
        """Product of the factors in the given order."""
        evens: dict = {}
        odds = []
        for v in factors:
            if v.odd:
                odds.append(v)
            else:
                evens[v] = evens.get(v, 0) + 1
        sign, od = _sort_odd(odds)
        c = as_scalar(coeff)
        if not sign or not c:
            return cls._wrap({})
        return cls._wrap({(tuple(sorted(evens.items())), od): c if sign > 0 else -c})

    # -- basic algebra --------------------------------------------------
    def __add__(self, o):
        if isinstance(o, FormalSeries):
            return NotImplemented
        if not isinstance(o, GradedPoly):
            o = GradedPoly.const(o)
        if not o.terms:
            return self
        out = dict(self.terms)
        for k, v in o.terms.items():
            w = out.get(k)
            if w is None:
                out[k] = v
            else:
                w = w + v
                if w:
                    out[k] = w
                else:
                    del out[k]
        return GradedPoly._wrap(out)

    __radd__ = __add__

    def __neg__(self):
        return GradedPoly._wrap({k: -v for k, v in self.terms.items()})

    def __sub__(self, o):
        if isinstance(o, FormalSeries):
            return NotImplemented
        if not isinstance(o, GradedPoly):
            o = GradedPoly.const(o)
        return self + (-o)

    def __rsub__(self, o):
        return GradedPoly.const(o) - self

    def scale(self, c) -> "GradedPoly":
        c = as_scalar(c)
        if not c:
            return GradedPoly._wrap({})
        if c == ONE:
            return self
        return GradedPoly._wrap({k: v * c for k, v in self.terms.items()})

    def __mul__(self, o):
        if isinstance(o, GradedPoly):
            return gmul(self, o)
        if isinstance(o, FormalSeries):
            return NotImplemented
        return self.scale(o)

    def __rmul__(self, o):
        return self.scale(o)

    def __pow__(self, k: int):
        out = GradedPoly.const(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, o):
        if isinstance(o, GradedPoly):
            return self.terms == o.terms
        if isinstance(o, FormalSeries):
            return NotImplemented
        try:
            return self.terms == GradedPoly.const(o).terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __len__(self):
        return len(self.terms)

    # -- inspection -----------------------------------------------------
    def constant_term(self) -> Scalar:
        return self.terms.get(_EMPTY, ZERO)

    def is_constant(self) -> bool:
        return all(m == _EMPTY for m in self.terms)

    def variables(self) -> set:
        out = set()
        for ev, od in self.terms:
            out.update(v for v, _ in ev)
            out.update(od)
        return out

    def field_degree(self) -> int:
        return max((sum(e for _, e in ev) for ev, _ in self.terms), default=0)

    def parities(self) -> set:
        return {len(od) & 1 for _, od in self.terms}

    def is_even(self) -> bool:
        return all(not (len(od) & 1) for _, od in self.terms)

    def is_odd(self) -> bool:
        return all(len(od) & 1 for _, od in self.terms)

    def antifield_numbers(self) -> set:
        return {sum(1 for v in od if v.kind == ANTIFIELD) for _, od in self.terms}

    def antifield_number(self) -> int:
        """Top antifield number (0 for the zero polynomial)."""
        return max(self.antifield_numbers(), default=0)

    def is_nilpotent(self) -> bool:
        """Every monomial contains an odd generator."""
        return all(od for _, od in self.terms)

    def support(self) -> frozenset:
        return frozenset(v.site for v in self.variables() if v.kind != MULTIPLIER)

    def restrict(self, pred) -> "GradedPoly":
        """Keep monomials (ev, od) for which pred(ev, od) holds."""
        return GradedPoly._wrap({k: v for k, v in self.terms.items() if pred(*k)})

    def map_coeffs(self, fn) -> "GradedPoly":
        return GradedPoly({k: fn(v) for k, v in self.terms.items()})

    # -- derivatives ------------------------------------------------------
    def dfield(self, v: VarId) -> "GradedPoly":
        return dfield(self, v)

    def dodd_left(self, v: VarId) -> "GradedPoly":
        return dodd_left(self, v)

    def dodd_right(self, v: VarId) -> "GradedPoly":
        return dodd_right(self, v)

    # -- substitution -----------------------------------------------------
    def substitute(self, images: Mapping[VarId, "GradedPoly"]) -> "GradedPoly":
        """Replace even field variables by even polynomials."""
        if not images:
            return self
        powers: dict = {}

        def power(v, e):
            key = (v, e)
            if key not in powers:
                powers[key] = images[v] if e == 1 else power(v, e - 1) * images[v]
            return powers[key]

        acc: dict = {}
        for (ev, od), c in self.terms.items():
            kept = []
            factor = GradedPoly._wrap({((), od): c})
            for v, e in ev:
                if v in images:
                    factor = factor * power(v, e)
                else:
                    kept.append((v, e))
            if kept:
                factor = factor * GradedPoly._wrap({(tuple(kept), ()): ONE})
            for k, val in factor.terms.items():
                w = acc.get(k)
                acc[k] = val if w is None else w + val
        return GradedPoly(acc)

    def evaluate(self, config: Mapping[VarId, object]) -> "GradedPoly":
        """Set field variables to scalar values; odd generators survive."""
        vals = {v: as_scalar(x) for v, x in config.items()}
        acc: dict = {}
        for (ev, od), c in self.terms.items():
            kept = []
            for v, e in ev:
                if v in vals:
                    c = c * vals[v] ** e
                else:
                    kept.append((v, e))
            if not c:
                continue
            k = (tuple(kept), od)
            w = acc.get(k)
            acc[k] = c if w is None else w + c
        return GradedPoly(acc)

    def coefficient_of_odd(self, gens: tuple) -> "GradedPoly":
        """C with self = C*g1*...*gk + (terms without all of gens), C free of gens."""
        out = self
        for g in reversed(gens):
            out = dodd_right(out, g)
        return out.restrict(lambda ev, od: not any(g in od for g in gens))

    # -- display ----------------------------------------------------------
    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: _mono_key(kv[0]))

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for (ev, od), c in self.sorted_terms():
            factors = [str(v) if e == 1 else f"{v}^{e}" for v, e in ev]
            factors += [str(v) for v in od]
            parts.append(f"{c!r}" + ("*" + "*".join(factors) if factors else ""))
        return " + ".join(parts)

    def to_json(self):
        rows = []
        for (ev, od), c in self.sorted_terms():
            rows.append({
                "even": [[_KIND_NAMES[v.kind], v.site, v.comp, e] for v, e in ev],
                "odd": [[_KIND_NAMES[v.kind], v.site, v.comp] for v in od],
                "coeff": c.to_json(),
            })
        return rows


def _mono_key(m):
    ev, od = m
    return (sum(e for _, e in ev) + len(od), ev, od)


def gmul(p: GradedPoly, q: GradedPoly) -> GradedPoly:
    """Graded-commutative product."""
    if not p.terms or not q.terms:
        return GradedPoly._wrap({})
    acc: dict = {}
    qi = list(q.terms.items())
    for (ea, oa), ca in p.terms.items():
        for (eb, ob), cb in qi:
            sign, od = _merge_odd(oa, ob)
            if not sign:
                continue
            key = (_merge_even(ea, eb), od)
            if ca.im or cb.im:
                re = ca.re * cb.re - ca.im * cb.im
                im = ca.re * cb.im + ca.im * cb.re
            else:
                re = ca.re * cb.re
                im = _ZQ
            if sign < 0:
                re, im = -re, -im
            w = acc.get(key)
            if w is None:
                acc[key] = [re, im]
            else:
                w[0] += re
                w[1] += im
    return GradedPoly._wrap({k: Scalar._raw(r, i) for k, (r, i) in acc.items() if r or i})


def dfield(p: GradedPoly, v: VarId) -> GradedPoly:
    if v.kind != FIELD:
        raise ValueError(f"dfield needs a field variable, got {v.kind_name}")
    acc: dict = {}
    for (ev, od), c in p.terms.items():
        for idx, (w, e) in enumerate(ev):
            if w == v:
                nev = ev[:idx] + ((w, e - 1),) + ev[idx + 1:] if e > 1 else ev[:idx] + ev[idx + 1:]
                k = (nev, od)
                val = c * e
                prev = acc.get(k)
                acc[k] = val if prev is None else prev + val
                break
    return GradedPoly(acc)


def _dodd(p: GradedPoly, v: VarId, right: bool) -> GradedPoly:
    if v.kind == FIELD:
        raise ValueError("odd derivative needs an antifield or multiplier")
    acc: dict = {}
    for (ev, od), c in p.terms.items():
        try:
            k = od.index(v)
        except ValueError:
            continue
        flips = len(od) - 1 - k if right else k
        val = -c if flips & 1 else c
        key = (ev, od[:k] + od[k + 1:])
        prev = acc.get(key)
        acc[key] = val if prev is None else prev + val
    return GradedPoly(acc)


def dodd_left(p: GradedPoly, v: VarId) -> GradedPoly:
    return _dodd(p, v, right=False)


def dodd_right(p: GradedPoly, v: VarId) -> GradedPoly:
    return _dodd(p, v, right=True)


def support(p) -> frozenset:
    if isinstance(p, FormalSeries):
        out = frozenset()
        for c in p.coeffs.values():
            out |= c.support()
        return out
    return p.support()


# ---------------------------------------------------------------------------
# formal series

PARAM_ORDER = ("eps", "lam", "mu", "s", "tau", "tau2", "tau3", "t1", "t2", "t3", "t4", "t5", "t6")


def _pkey(name):
    try:
        return (PARAM_ORDER.index(name), name)
    except ValueError:
        return (len(PARAM_ORDER), name)


class FormalSeries:
    """Truncated power series in named counting parameters.

    `caps[i]` is the highest retained power of `params[i]`.  Coefficients
    are GradedPoly; absent keys are zero.
    """

    __slots__ = ("params", "caps", "coeffs")

    def __init__(self, params: Iterable[str] = (), caps: Iterable[int] = (), coeffs: Mapping | None = None):
        params = tuple(params)
        caps = tuple(int(c) for c in caps)
        if len(params) != len(caps):
            raise ValueError("params and caps differ in length")
        if any(c < 0 for c in caps):
            raise ValueError("caps must be non-negative")
        order = sorted(range(len(params)), key=lambda i: _pkey(params[i]))
        self.params = tuple(params[i] for i in order)
        self.caps = tuple(caps[i] for i in order)
        self.coeffs = {}
        if coeffs:
            for deg, c in coeffs.items():
                deg = tuple(deg[i] for i in order)
                if not isinstance(c, GradedPoly):
                    c = GradedPoly.const(c)
                if c.terms and all(d <= k for d, k in zip(deg, self.caps)):
                    prev = self.coeffs.get(deg)
                    self.coeffs[deg] = c if prev is None else prev + c
            self.coeffs = {k: v for k, v in self.coeffs.items() if v.terms}

    @staticmethod
    def _wrap(params, caps, coeffs) -> "FormalSeries":
        s = object.__new__(FormalSeries)
        s.params = params
        s.caps = caps
        s.coeffs = coeffs
        return s

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, p, params=(), caps=()) -> "FormalSeries":
        if not isinstance(p, GradedPoly):
            p = GradedPoly.const(p)
        s = cls(params, caps)
        if p.terms:
            s.coeffs[(0,) * len(s.params)] = p
        return s

    @classmethod
    def param(cls, name: str, cap: int, coeff=None) -> "FormalSeries":
        c = GradedPoly.const(1) if coeff is None else (coeff if isinstance(coeff, GradedPoly) else GradedPoly.const(coeff))
        return cls((name,), (cap,), {(1,): c} if cap >= 1 else {})

    @classmethod
    def lift(cls, x, like: "FormalSeries | None" = None) -> "FormalSeries":
        if isinstance(x, FormalSeries):
            return x
        if like is None:
            return cls.constant(x)
        return cls.constant(x, like.params, like.caps)

    # -- structure ----------------------------------------------------------
    def cap_of(self, name: str) -> int:
        return self.caps[self.params.index(name)] if name in self.params else 0

    def zero_key(self):
        return (0,) * len(self.params)

    def coefficient(self, **degs) -> GradedPoly:
        """Coefficient at the given degrees; unspecified params are 0."""
        key = tuple(degs.get(p, 0) for p in self.params)
        for p in degs:
            if p not in self.params and degs[p]:
                return GradedPoly()
        return self.coeffs.get(key, GradedPoly())

    def degree0(self) -> GradedPoly:
        return self.coeffs.get(self.zero_key(), GradedPoly())

    def extend(self, params, caps) -> "FormalSeries":
        """Re-express over a superset of parameters with the given caps."""
        params = tuple(params)
        caps = tuple(caps)
        idx = [params.index(p) for p in self.params]
        out = {}
        for deg, c in self.coeffs.items():
            new = [0] * len(params)
            ok = True
            for d, j in zip(deg, idx):
                if d > caps[j]:
                    ok = False
                    break
                new[j] = d
            if ok:
                out[tuple(new)] = c
        return FormalSeries._wrap(params, caps, out)

    def _layout(self, other: "FormalSeries"):
        if self.params == other.params and self.caps == other.caps:
            return self.params, self.caps
        names = sorted(set(self.params) | set(other.params), key=_pkey)
        caps = []
        for n in names:
            if n in self.params and n in other.params:
                caps.append(min(self.cap_of(n), other.cap_of(n)))
            elif n in self.params:
                caps.append(self.cap_of(n))
            else:
                caps.append(other.cap_of(n))
        return tuple(names), tuple(caps)

    def aligned(self, other):
        params, caps = self._layout(other)
        a = self if (self.params, self.caps) == (params, caps) else self.extend(params, caps)
        b = other if (other.params, other.caps) == (params, caps) else other.extend(params, caps)
        return a, b

    # -- arithmetic --------------------------------------------------------
    def __add__(self, o):
        o = FormalSeries.lift(o, self)
        a, b = self.aligned(o)
        out = dict(a.coeffs)
        for k, v in b.coeffs.items():
            w = out.get(k)
            if w is None:
                out[k] = v
            else:
                w = w + v
                if w.terms:
                    out[k] = w
                else:
                    del out[k]
        return FormalSeries._wrap(a.params, a.caps, out)

    __radd__ = __add__

    def __neg__(self):
        return FormalSeries._wrap(self.params, self.caps, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, o):
        return self + (-FormalSeries.lift(o, self))

    def __rsub__(self, o):
        return FormalSeries.lift(o, self) - self

    def scale(self, c) -> "FormalSeries":
        c = as_scalar(c)
        if not c:
            return FormalSeries._wrap(self.params, self.caps, {})
        return FormalSeries._wrap(self.params, self.caps, {k: v.scale(c) for k, v in self.coeffs.items()})

    def __mul__(self, o):
        if isinstance(o, (GradedPoly, FormalSeries)):
            return series_mul(self, FormalSeries.lift(o, self))
        return self.scale(o)

    def __rmul__(self, o):
        if isinstance(o, GradedPoly):
            return series_mul(FormalSeries.lift(o, self), self)
        return self.scale(o)

    def __pow__(self, k: int):
        out = FormalSeries.constant(1, self.params, self.caps)
        for _ in range(k):
            out = out * self
        return out

    def map(self, fn) -> "FormalSeries":
        """Apply a linear map to every coefficient."""
        out = {}
        for k, v in self.coeffs.items():
            w = fn(v)
            if w.terms:
                out[k] = w
        return FormalSeries._wrap(self.params, self.caps, out)

    def truncate(self, **caps) -> "FormalSeries":
        newcaps = tuple(min(c, caps.get(p, c)) for p, c in zip(self.params, self.caps))
        out = {k: v for k, v in self.coeffs.items() if all(d <= c for d, c in zip(k, newcaps))}
        return FormalSeries._wrap(self.params, newcaps, out)

    def derivative(self, name: str) -> "FormalSeries":
        """d/d(name); the cap of `name` drops by one."""
        if name not in self.params:
            return FormalSeries._wrap(self.params, self.caps, {})
        j = self.params.index(name)
        caps = list(self.caps)
        caps[j] = max(caps[j] - 1, 0)
        out = {}
        for k, v in self.coeffs.items():
            if k[j]:
                nk = k[:j] + (k[j] - 1,) + k[j + 1:]
                out[nk] = v.scale(k[j])
        return FormalSeries._wrap(self.params, tuple(caps), out)

    def antiderivative(self, name: str, cap: int | None = None) -> "FormalSeries":
        """Integral in `name` from 0; adds the parameter if absent (cap required then)."""
        s = self
        if name not in s.params:
            if cap is None:
                raise ValueError(f"no cap for new parameter {name}")
            s = s.aligned(FormalSeries((name,), (cap,)))[0]
        j = s.params.index(name)
        top = s.caps[j] if cap is None else min(cap, s.caps[j])
        out = {}
        for k, v in s.coeffs.items():
            if k[j] + 1 <= top:
                nk = k[:j] + (k[j] + 1,) + k[j + 1:]
                out[nk] = v.scale(Scalar._raw(mpq(1, k[j] + 1), mpq(0)))
        caps = s.caps[:j] + (top,) + s.caps[j + 1:]
        return FormalSeries._wrap(s.params, caps, out)

    def drop(self, name: str, degree: int = 0) -> "FormalSeries":
        """Coefficient series of name**degree (removes that parameter)."""
        if name not in self.params:
            return self if degree == 0 else FormalSeries._wrap(self.params, self.caps, {})
        j = self.params.index(name)
        params = self.params[:j] + self.params[j + 1:]
        caps = self.caps[:j] + self.caps[j + 1:]
        out = {k[:j] + k[j + 1:]: v for k, v in self.coeffs.items() if k[j] == degree}
        return FormalSeries._wrap(params, caps, out)

    def substitute_param(self, name: str, value: "FormalSeries") -> "FormalSeries":
        """Replace the parameter `name` by a series (composition)."""
        if name not in self.params:
            return self
        j = self.params.index(name)
        rest = self.drop(name, 0)
        out = rest
        powv = FormalSeries.constant(1)
        for d in range(1, self.caps[j] + 1):
            powv = powv * value
            part = self.drop(name, d)
            if part.coeffs:
                out = out + part * powv
        return out

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, o):
        if isinstance(o, FormalSeries):
            a, b = self.aligned(o)
            return a.coeffs == b.coeffs
        if isinstance(o, GradedPoly):
            return self == FormalSeries.lift(o, self)
        try:
            return self == FormalSeries.lift(GradedPoly.const(o), self)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash((self.params, frozenset(self.coeffs.items())))

    def items(self):
        return sorted(self.coeffs.items())

    def first_nonzero(self):
        """(degree dict, coefficient) of the lowest nonzero total degree."""
        if not self.coeffs:
            return None
        k = min(self.coeffs, key=lambda d: (sum(d), d))
        return dict(zip(self.params, k)), self.coeffs[k]

    def variables(self) -> set:
        out = set()
        for c in self.coeffs.values():
            out |= c.variables()
        return out

    def is_even(self) -> bool:
        return all(c.is_even() for c in self.coeffs.values())

    def __repr__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for k, v in self.items():
            tag = "*".join(f"{p}^{d}" if d > 1 else p for p, d in zip(self.params, k) if d)
            parts.append(f"[{tag or '1'}]({v!r})")
        return " + ".join(parts)

    def to_json(self):
        return {
            "params": list(self.params),
            "caps": list(self.caps),
            "coeffs": [{"degree": list(k), "poly": v.to_json()} for k, v in self.items()],
        }


def series_mul(a: FormalSeries, b: FormalSeries) -> FormalSeries:
    a, b = a.aligned(b)
    caps = a.caps
    acc: dict = {}
    bi = list(b.coeffs.items())
    for ka, va in a.coeffs.items():
        for kb, vb in bi:
            k = tuple(x + y for x, y in zip(ka, kb))
            if any(d > c for d, c in zip(k, caps)):
                continue
            prod = gmul(va, vb)
            if not prod.terms:
                continue
            w = acc.get(k)
            acc[k] = prod if w is None else w + prod
    return FormalSeries._wrap(a.params, caps, {k: v for k, v in acc.items() if v.terms})


def _split_small(s: FormalSeries, what: str):
    """Write s = c + small with c a scalar and small nilpotent-with-truncation."""
    d0 = s.degree0()
    c = d0.constant_term()
    rest0 = d0 - GradedPoly.const(c)
    if not rest0.is_nilpotent():
        raise ValueError(f"{what}: degree-0 coefficient is not of the form scalar + nilpotent")
    small = s - FormalSeries.constant(GradedPoly.const(c), s.params, s.caps)
    return c, small


def _power_sum(small: FormalSeries, coeff_fn) -> FormalSeries:
    """sum_k coeff_fn(k) * small**k, terminating by nilpotency/truncation."""
    out = FormalSeries.constant(coeff_fn(0), small.params, small.caps)
    term = FormalSeries.constant(1, small.params, small.caps)
    k = 0
    limit = sum(small.caps) + len(small.variables()) + 2
    while True:
        k += 1
        term = term * small
        if term.is_zero():
            return out
        if k > limit:
            raise ArithmeticError("power series failed to terminate")
        out = out + term.scale(coeff_fn(k))


def _inv_factorial(k: int) -> Scalar:
    f = 1
    for j in range(2, k + 1):
        f *= j
    return Scalar(mpq(1, f))


def series_exp(s) -> FormalSeries:
    """exp(s).  The degree-0 part must be 0 or nilpotent (odd-generated)."""
    s = FormalSeries.lift(s)
    c, small = _split_small(s, "exp")
    if c:
        raise ValueError("exp: degree-0 coefficient has a nonzero scalar part")
    return _power_sum(small, _inv_factorial)


def series_log(s) -> FormalSeries:
    """log(s) for degree-0 part 1 (+ nilpotent)."""
    s = FormalSeries.lift(s)
    c, small = _split_small(s, "log")
    if c != ONE:
        raise ValueError("log: degree-0 scalar part must be 1")

    def coeff(k):
        if k == 0:
            return ZERO
        return Scalar(mpq(-1 if k % 2 == 0 else 1, k))

    return _power_sum(small, coeff)


def series_inv(s) -> FormalSeries:
    """Multiplicative inverse; needs an invertible scalar degree-0 part."""
    s = FormalSeries.lift(s)
    c, small = _split_small(s, "inv")
    if not c:
        raise ZeroDivisionError("inv: degree-0 coefficient is not invertible")
    ci = c.inverse()
    small = small.scale(ci)
    return _power_sum(small, lambda k: -ONE if k & 1 else ONE).scale(ci)


def random_poly(rng, variables, n_terms=4, max_deg=3, odd_max=2, coeff_range=3, complex_coeffs=False):
    """Random GradedPoly for property tests (deterministic given rng)."""
    evens = [v for v in variables if not v.odd]
    odds = [v for v in variables if v.odd]
    p = GradedPoly()
    for _ in range(n_terms):
        deg = rng.randint(0, max_deg)
        fac = [rng.choice(evens) for _ in range(deg)] if evens else []
        if odds:
            fac += rng.sample(odds, rng.randint(0, min(odd_max, len(odds))))
        re = rng.randint(-coeff_range, coeff_range)
        im = rng.randint(-coeff_range, coeff_range) if complex_coeffs else 0
        p = p + GradedPoly.monomial(fac, Scalar(re, im))
    return p


def degrees_upto(caps):
    return _cartesian(*(range(c + 1) for c in caps))
