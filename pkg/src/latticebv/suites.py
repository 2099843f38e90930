"""Named verification suites.

Every check has an id, an anchor label, a short name and a formal statement
(used by `explain`), and an implementation taking an Env.  Random probes come
from a per-check RNG seeded by (seed, check id), so any subset of checks runs
standalone and gives the same result.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable

from gmpy2 import mpq

from . import bv, cocycle, gauge
from .config import ConfigError, SuiteConfig, model_from_json
from .deform import Deformation, FreeModel, as_series, lagrangian, twist
from .galg import (
    I, ONE, FormalSeries, GradedPoly, Scalar, antifield, eta, field, gmul, random_poly, series_exp,
    series_inv, series_log, support,
)
from .report import CheckResult, residual_summary, to_jsonable
from .rg import (
    RenMap, anomaly_map, check_AMWI, check_dX_on_z_two_ways, check_extended_WZ, check_lie_cocycle,
    check_relation_q, lieR_bracket, solve_anomaly, wz0_terms,
)
from .sym import (
    GroupElement, LieSymmetry, act_config, admissible_cutoff, delta_gL, exp_path, gL_action,
    lie_bracket, partial_X, pullback,
)

__all__ = ["Entry", "CATALOG", "SUITES", "Env", "run_check", "checks_for"]


@dataclass(frozen=True)
class Entry:
    id: str
    suite: str
    anchor: str
    name: str
    statement: str
    fn: Callable


CATALOG: dict[str, Entry] = {}
SUITES: dict[str, list[str]] = {}


def register(cid, suite, anchor, name, statement):
    def deco(fn):
        if cid in CATALOG:
            raise ValueError(f"duplicate check id {cid}")
        CATALOG[cid] = Entry(cid, suite, anchor, name, statement, fn)
        SUITES.setdefault(suite, []).append(cid)
        return fn
    return deco


def checks_for(suites) -> list[str]:
    return [c for s in suites for c in SUITES.get(s, [])]


class Env:
    """What a check sees: the config, a private RNG, and cached contexts."""

    def __init__(self, cfg: SuiteConfig, cid: str):
        self.cfg = cfg
        self.rng = random.Random(f"{cfg.seed}:{cid}")
        self.m = cfg.model
        self.K = cfg.K

    def ctxs(self, model: FreeModel | None = None):
        return self.cfg.contexts(model)

    def model(self, name: str) -> FreeModel:
        if self.m.name == name:
            return self.m
        return model_from_json(name)


def run_check(cfg: SuiteConfig, cid: str) -> CheckResult:
    e = CATALOG[cid]
    r = e.fn(Env(cfg, cid))
    r.check = cid
    return r


# -- random inputs --------------------------------------------------------------

def _antifields(m):
    return [antifield(v.site, v.comp) for v in m.vars]


def rand_lie(rng, m, shift=True, sites=None, antisym=False, lo=-2, hi=2) -> LieSymmetry:
    sites = list(m.sites) if sites is None else list(sites)
    a, p = {}, {}
    for x in sites:
        if antisym:
            mat = [[0] * m.n for _ in range(m.n)]
            for i in range(m.n):
                for j in range(i + 1, m.n):
                    v = rng.randint(lo, hi)
                    mat[i][j], mat[j][i] = v, -v
        else:
            mat = [[rng.randint(lo, hi) for _ in range(m.n)] for _ in range(m.n)]
        a[x] = mat
        if shift:
            p[x] = [rng.randint(lo, hi) for _ in range(m.n)]
    return LieSymmetry(m.n, a, p)


def rand_F(rng, m, n_terms=4, max_deg=3, sites=None) -> GradedPoly:
    vs = [v for v in m.vars if sites is None or v.site in sites]
    return random_poly(rng, vs, n_terms, max_deg)


def homogeneous(p: GradedPoly, parity: int) -> GradedPoly:
    return p.restrict(lambda ev, od: len(od) % 2 == parity)


def rand_homog(rng, variables, parity, n_terms=4, max_deg=2, odd_max=3):
    for _ in range(50):
        p = homogeneous(random_poly(rng, variables, n_terms, max_deg, odd_max, 3, True), parity)
        if p.terms:
            return p
    raise RuntimeError("could not draw a homogeneous polynomial")


def rand_group(rng, m, perm=True) -> GroupElement:
    A, psi = {}, {}
    for x in m.sites:
        if rng.random() < 0.7:
            while True:
                mat = [[mpq(rng.randint(-2, 2), rng.randint(1, 2)) for _ in range(m.n)] for _ in range(m.n)]
                try:
                    GroupElement(m.n, {x: mat})
                except ValueError:
                    continue
                A[x] = mat
                break
        if rng.random() < 0.5:
            psi[x] = [rng.randint(-2, 2) for _ in range(m.n)]
    rho = None
    if perm and len(m.sites) > 1 and rng.random() < 0.5:
        a, b = rng.sample(list(m.sites), 2)
        rho = {a: b, b: a}
    return GroupElement(m.n, A, psi, rho)


def _collect(name: str, items) -> CheckResult:
    """Fold (CheckResult, inputs) pairs into one result; the first failure is the reproducer."""
    n = 0
    bad = []
    first = None
    extra = {}
    for r, inputs in items:
        n += 1
        for k, v in r.extra.items():
            if isinstance(v, bool):
                extra[k] = extra.get(k, False) or v
            elif isinstance(v, list) and all(isinstance(e, str) for e in v):
                extra[k] = sorted(set(extra.get(k, [])) | set(v))
            elif k not in extra:
                extra[k] = v
        if not r.ok:
            bad.append(n - 1)
            if first is None:
                first = (r, inputs)
    out = CheckResult(name, "pass" if not bad else "fail")
    out.extra = {"trials": n, **({"failed_trials": bad} if bad else {}), **extra}
    if first is not None:
        out.residual = first[0].residual
        out.extra.update({k: v for k, v in first[0].extra.items()})
        out.inputs = to_jsonable(first[1])
    return out


def _res(name, x, **extra) -> CheckResult:
    return CheckResult.from_residual(name, x, **extra)


def _zero(x) -> bool:
    return FormalSeries.lift(x).is_zero()


def _eq(name, pairs) -> CheckResult:
    """Residual is the sum of a - b over labelled pairs; failing labels are listed."""
    total = FormalSeries.constant(0)
    bad = []
    for label, a, b in pairs:
        d = FormalSeries.lift(a) - FormalSeries.lift(b)
        if not d.is_zero():
            bad.append(label)
            total = total + d
    r = _res(name, total)
    if bad:
        r.status = "fail"
        r.extra["failing"] = bad
    return r


def _sign(k) -> Scalar:
    return ONE if k % 2 == 0 else -ONE


def _par(p: GradedPoly) -> int:
    return 0 if p.is_even() else 1


# ============================================================================
# galg
# ============================================================================

def _galg_vars(m):
    return list(m.vars) + _antifields(m) + [eta(1), eta(2)]


@register("galg.gmul", "galg", "graded product", "graded commutative product",
          "p q = (-1)^{|p||q|} q p and (p q) r = p (q r) on random homogeneous inputs; odd generators square to 0")
def _gmul(env):
    m, rng = env.m, env.rng
    vs = _galg_vars(m)

    def trial():
        p, q, r = (rand_homog(rng, vs, rng.randint(0, 1)) for _ in range(3))
        s = _sign(_par(p) * _par(q))
        res = _eq("galg.gmul", [("commutativity", gmul(p, q), gmul(q, p).scale(s)),
                                ("associativity", gmul(gmul(p, q), r), gmul(p, gmul(q, r)))])
        return res, {"p": p, "q": q, "r": r}
    items = [trial() for _ in range(max(100, env.cfg.trials))]
    a = GradedPoly.var(antifield(m.sites[0]))
    items.append((_res("galg.gmul", a * a), {"square": a}))
    return _collect("galg.gmul", items)


@register("galg.leibniz", "galg", "odd derivations", "graded Leibniz rule",
          "d^l(pq) = (d^l p) q + (-1)^{|p|} p d^l q and d^r(pq) = p d^r q + (-1)^{|q|} (d^r p) q; dfield is an even derivation")
def _leibniz(env):
    m, rng = env.m, env.rng
    vs = _galg_vars(m)
    odds = [v for v in vs if v.odd]

    def trial():
        p, q = (rand_homog(rng, vs, rng.randint(0, 1)) for _ in range(2))
        v = rng.choice(odds)
        f = rng.choice(m.vars)
        pq = gmul(p, q)
        return _eq("galg.leibniz", [
            ("left", pq.dodd_left(v), p.dodd_left(v) * q + (p * q.dodd_left(v)).scale(_sign(_par(p)))),
            ("right", pq.dodd_right(v), p * q.dodd_right(v) + (p.dodd_right(v) * q).scale(_sign(_par(q)))),
            ("field", pq.dfield(f), p.dfield(f) * q + p * q.dfield(f)),
        ]), {"p": p, "q": q, "odd": str(v), "field": str(f)}
    return _collect("galg.leibniz", [trial() for _ in range(max(100, env.cfg.trials))])


@register("galg.derivations", "galg", "derivations commute", "commuting derivatives",
          "dfield derivatives commute; odd left derivatives anticommute")
def _derivs(env):
    m, rng = env.m, env.rng
    vs = _galg_vars(m)
    odds = [v for v in vs if v.odd]

    def trial():
        p = rand_homog(rng, vs, rng.randint(0, 1), 6, 3)
        f1, f2 = rng.choice(m.vars), rng.choice(m.vars)
        o1, o2 = rng.sample(odds, 2)
        return _eq("galg.derivations", [
            ("even", p.dfield(f1).dfield(f2), p.dfield(f2).dfield(f1)),
            ("odd", p.dodd_left(o1).dodd_left(o2), -p.dodd_left(o2).dodd_left(o1)),
            ("mixed", p.dodd_left(o1).dfield(f1), p.dfield(f1).dodd_left(o1)),
        ]), {"p": p}
    return _collect("galg.derivations", [trial() for _ in range(env.cfg.trials)])


@register("galg.support", "galg", "functional support", "support of a product",
          "supp(pq) is contained in supp p union supp q; constants have empty support")
def _support(env):
    m, rng = env.m, env.rng
    vs = _galg_vars(m)

    def trial():
        p, q = (rand_homog(rng, vs, rng.randint(0, 1)) for _ in range(2))
        ok = support(gmul(p, q)) <= support(p) | support(q)
        return CheckResult.from_bool("galg.support", ok), {"p": p, "q": q}
    items = [trial() for _ in range(env.cfg.trials)]
    items.append((CheckResult.from_bool("galg.support", support(GradedPoly.const(5)) == frozenset()), {}))
    return _collect("galg.support", items)


@register("galg.series", "galg", "formal power series", "series exp, log, inverse",
          "log(exp s) = s, exp(log(1+s)) = 1+s, inv(inv u) = u and u inv(u) = 1 through the caps")
def _series(env):
    m, rng = env.m, env.rng
    K = env.K

    def rs(const):
        s = FormalSeries.constant(const, ("eps", "lam"), (K, 2))
        for d in range(1, K + 1):
            s = s + FormalSeries.param("eps", K) ** d * rand_F(rng, m, 2, 2)
        return s + FormalSeries.param("lam", 2) * rand_F(rng, m, 2, 2)

    def trial():
        s = rs(0)
        u = rs(rng.choice([1, 2, -3]))
        one = FormalSeries.constant(1, s.params, s.caps)
        return _eq("galg.series", [
            ("log_exp", series_log(series_exp(s)), s),
            ("exp_log", series_exp(series_log(one + s)), one + s),
            ("inv_inv", series_inv(series_inv(u)), u),
            ("inv", u * series_inv(u), one),
        ]), {"s": s, "u": u}
    return _collect("galg.series", [trial() for _ in range(max(5, env.cfg.trials // 4))])


@register("galg.antibracket", "galg", "eq:antibracket", "antibracket",
          "graded antisymmetry, graded Leibniz rule and graded Jacobi identity of the antibracket on random homogeneous inputs")
def _antibracket_axioms(env):
    m, rng = env.m, env.rng
    vs = list(m.vars) + _antifields(m)
    br = bv.antibracket

    def trial():
        F, G, H = (rand_homog(rng, vs, rng.randint(0, 1), 3, 2, 2) for _ in range(3))
        f, g = _par(F), _par(G)
        return _eq("galg.antibracket", [
            ("antisymmetry", br(F, G), br(G, F).scale(-_sign((f + 1) * (g + 1)))),
            ("leibniz", br(F, G * H), br(F, G) * H + (G * br(F, H)).scale(_sign(g * (f + 1)))),
            ("jacobi", br(F, br(G, H)), br(br(F, G), H) + br(G, br(F, H)).scale(_sign((f + 1) * (g + 1)))),
        ]), {"F": F, "G": G, "H": H}
    return _collect("galg.antibracket", [trial() for _ in range(max(100, env.cfg.trials))])


# ============================================================================
# deform
# ============================================================================

def _with_antifields(rng, m, n_terms=4, max_deg=3):
    return random_poly(rng, list(m.vars) + _antifields(m), n_terms, max_deg, 1)


@register("deform.T_inverse", "deform", "time-ordering map", "T and its inverse",
          "T(T^-1 p) = p = T^-1(T p) on polynomials with antifields; M E = i Id")
def _t_inverse(env):
    m, rng = env.m, env.rng
    N = m.size
    ME = all(sum((Scalar._raw(m.M[j][k], mpq(0)) * m.E[k][l] for k in range(N)), Scalar(0))
             == (I if j == l else Scalar(0)) for j in range(N) for l in range(N))

    def trial():
        p = _with_antifields(rng, m, 5, 4)
        return _eq("deform.T_inverse", [("T_Tinv", m.wick(m.wick_inv(p)), p),
                                        ("Tinv_T", m.wick_inv(m.wick(p)), p)]), {"p": p}
    items = [trial() for _ in range(env.cfg.trials)]
    items.append((CheckResult.from_bool("deform.T_inverse", ME), {"check": "M E = i Id"}))
    return _collect("deform.T_inverse", items)


@register("deform.field_independence", "deform", "field independence", "field independence",
          "T commutes with every field derivative")
def _field_indep(env):
    m, rng = env.m, env.rng

    def trial():
        p = _with_antifields(rng, m, 5, 4)
        v = rng.choice(m.vars)
        return _res("deform.field_independence", m.wick(p.dfield(v)) - m.wick(p).dfield(v)), {"p": p, "v": str(v)}
    return _collect("deform.field_independence", [trial() for _ in range(env.cfg.trials)])


@register("deform.field_equation", "deform", "eq:T-field-eq", "off-shell field equation",
          "T(F <Phi,f>) = T(<F', E f>) + T(F) <Phi,f> on random cubic F")
def _field_eq(env):
    m, rng = env.m, env.rng

    def trial():
        F = rand_F(rng, m, 4, 3)
        f = [Scalar(rng.randint(-3, 3)) for _ in m.vars]
        Ef = [sum((m.E[j][k] * f[k] for k in range(m.size)), Scalar(0)) for j in range(m.size)]
        pair = m.pairing(f)
        lhs = m.wick(F * pair)
        corr = GradedPoly()
        for j, v in enumerate(m.vars):
            corr = corr + F.dfield(v).scale(Ef[j])
        rhs = m.wick(corr) + m.wick(F) * pair
        return _res("deform.field_equation", lhs - rhs), {"F": F, "f": f}
    return _collect("deform.field_equation", [trial() for _ in range(env.cfg.trials)])


@register("deform.tprod", "deform", "eq:cdotT", "time-ordered product",
          "._T is commutative and associative with unit 1; S(F) ._T S(F)^-1 = 1 in both contexts")
def _tprod(env):
    m, rng = env.m, env.rng

    def trial():
        F, G, H = (rand_F(rng, m, 3, 3) for _ in range(3))
        ctx = env.ctxs()[rng.randint(0, 1)]
        tp = ctx.tprod
        S = ctx.smatrix(as_series(F, env.K))
        Sinv = ctx.smatrix_inv(as_series(F, env.K))
        one = FormalSeries.constant(1, S.params, S.caps)
        return _eq("deform.tprod", [
            ("commutative", tp(F, G), tp(G, F)),
            ("associative", tp(tp(F, G), H), tp(F, tp(G, H))),
            ("unit", tp(GradedPoly.const(1), F), F),
            ("inverse", tp(S, Sinv), one),
        ]), {"F": F, "G": G, "H": H, "twisted": ctx.twisted}
    return _collect("deform.tprod", [trial() for _ in range(max(4, env.cfg.trials // 4))])


@register("deform.twist", "deform", "eq:MainT", "renormalized deformation",
          "twisting by Z = id changes nothing; twist(twist(m, Z1), Z2) = twist(m, Z1 o Z2); z = c d^2 shifts Z(phi0^2) by 2c")
def _twist(env):
    m, rng = env.m, env.rng
    K = env.K
    Z1 = RenMap.single(2, m.sites[0], (0, 0), mpq(1, 3))
    Z2 = RenMap.single(3, m.sites[-1], (0, 0, 0), mpq(-1, 2))
    F = rand_F(rng, m, 4, 3)
    plain, same = Deformation(m), twist(m, RenMap())
    nested = twist(twist(m, Z1), Z2)
    direct = twist(m, Z1.compose(Z2))
    p0 = GradedPoly.var(field(m.sites[0])) ** 2
    shift = twist(m, Z1).z_apply(p0) - p0
    return _collect("deform.twist", [(_eq("deform.twist", [
        ("identity", same.smatrix(as_series(F, K)), plain.smatrix(as_series(F, K))),
        ("compose", nested.smatrix(as_series(F, K)), direct.smatrix(as_series(F, K))),
        ("shift", shift, GradedPoly.const(Scalar(mpq(2, 3)))),
    ]), {"F": F})])


@register("deform.lagrangian", "deform", "free Lagrangian", "free Lagrangian",
          "dL(1)/dphi = M phi; L(0) = 0; L(f) with f = 1 near a point agrees with L there")
def _lagr(env):
    m = env.m
    L = lagrangian(m)
    pairs = [(f"eom{j}", L.dfield(v), m.eom(j)) for j, v in enumerate(m.vars)]
    pairs.append(("zero", lagrangian(m, {x: 0 for x in m.sites}), GradedPoly()))
    return _eq("deform.lagrangian", pairs)


# ============================================================================
# sym
# ============================================================================

@register("sym.group", "sym", "eq:repres-of-G", "affine group law",
          "(gh)k = g(hk), g g^-1 = e, and (gh)_* = g_* h_* on random elements with permutations")
def _group(env):
    m, rng = env.m, env.rng
    e = GroupElement(m.n)

    def trial():
        g, h, k = (rand_group(rng, m) for _ in range(3))
        F = rand_F(rng, m, 3, 3)
        ok = (g * h) * k == g * (h * k) and g * g.inverse() == e and g.inverse() * g == e
        r = _eq("sym.group", [("pullback", pullback(g * h, F, m), pullback(g, pullback(h, F, m), m))])
        if not ok:
            r.status = "fail"
            r.extra["failing"] = r.extra.get("failing", []) + ["group law"]
        return r, {"g": g, "h": h, "k": k, "F": F}
    return _collect("sym.group", [trial() for _ in range(env.cfg.trials)])


@register("sym.act_config", "sym", "eq:g-star", "pullback by substitution",
          "(g_* F)[phi] = F[g(phi)] with g(phi)(x) = phi(rho x) A(x) + psi(x)")
def _act(env):
    m, rng = env.m, env.rng

    def trial():
        g = rand_group(rng, m)
        F = rand_F(rng, m, 4, 3)
        phi = m.config([rng.randint(-3, 3) for _ in m.vars])
        return _res("sym.act_config", pullback(g, F, m).evaluate(phi) - F.evaluate(act_config(g, phi))), \
            {"g": g, "F": F}
    return _collect("sym.act_config", [trial() for _ in range(env.cfg.trials)])


@register("sym.gL", "sym", "eq:g_L", "L-dependent action",
          "(gh)_L = g_L o h_L, e_L = id, and delta_g L does not depend on the admissible cutoff")
def _gL(env):
    m, rng = env.m, env.rng
    e = GroupElement(m.n)

    def trial():
        g, h = rand_group(rng, m), rand_group(rng, m)
        F = rand_F(rng, m, 3, 3)
        f1 = admissible_cutoff(g, m)
        f2 = dict(f1)
        for x in m.sites:
            if x not in m.neighbors(g.support()):
                f2[x] = mpq(rng.randint(-3, 3), 2)
        return _eq("sym.gL", [
            ("representation", gL_action(g * h, F, m), gL_action(g, gL_action(h, F, m), m)),
            ("identity", gL_action(e, F, m), F),
            ("cutoff", delta_gL(g, m, f1), delta_gL(g, m, f2)),
        ]), {"g": g, "h": h, "F": F}
    return _collect("sym.gL", [trial() for _ in range(env.cfg.trials)])


@register("sym.lie", "sym", "eq:bracket", "Lie bracket representation",
          "[d_X, d_Y] = d_[X,Y], the bracket is antisymmetric and obeys Jacobi, d_X is a derivation")
def _lie(env):
    m, rng = env.m, env.rng

    def trial():
        X, Y, W = (rand_lie(rng, m) for _ in range(3))
        F, G = rand_F(rng, m, 3, 3), rand_F(rng, m, 3, 2)
        d = lambda Z, P: partial_X(Z, P, m)
        jac = lie_bracket(X, lie_bracket(Y, W)) + lie_bracket(Y, lie_bracket(W, X)) + lie_bracket(W, lie_bracket(X, Y))
        r = _eq("sym.lie", [
            ("representation", d(X, d(Y, F)) - d(Y, d(X, F)), d(lie_bracket(X, Y), F)),
            ("derivation", d(X, F * G), d(X, F) * G + F * d(X, G)),
        ])
        if not jac.is_zero() or not (lie_bracket(X, Y) + lie_bracket(Y, X)).is_zero():
            r.status = "fail"
            r.extra["failing"] = r.extra.get("failing", []) + ["bracket axioms"]
        return r, {"X": X, "Y": Y, "W": W, "F": F, "G": G}
    return _collect("sym.lie", [trial() for _ in range(env.cfg.trials)])


@register("sym.exp_path", "sym", "exponential path", "exponential path",
          "d/dlam at 0 of exp(lam X)_* F is d_X F")
def _exp(env):
    m, rng = env.m, env.rng

    def trial():
        X = rand_lie(rng, m)
        F = rand_F(rng, m, 3, 3)
        g = exp_path(X, m, env.cfg.K_lam)
        return _res("sym.exp_path", FormalSeries.lift(g.pullback(F)).drop("lam", 1) - partial_X(X, F, m)), \
            {"X": X, "F": F}
    return _collect("sym.exp_path", [trial() for _ in range(env.cfg.trials)])


@register("sym.support", "sym", "support of the action", "support of the action",
          "supp(g_* F - F) within supp F union supp g; supp delta_g L within the M-neighbourhood of supp g")
def _symsupp(env):
    m, rng = env.m, env.rng

    def trial():
        g = rand_group(rng, m)
        F = rand_F(rng, m, 3, 3)
        ok1 = support(pullback(g, F, m) - F) <= support(F) | g.support()
        ok2 = support(delta_gL(g, m)) <= m.neighbors(g.support())
        return CheckResult.from_bool("sym.support", ok1 and ok2), {"g": g, "F": F}
    return _collect("sym.support", [trial() for _ in range(env.cfg.trials)])


# ============================================================================
# rg
# ============================================================================

def _rand_renmap(rng, m) -> RenMap:
    ks = []
    for _ in range(2):
        order = rng.choice([2, 2, 3, 4])
        x = rng.choice(m.sites)
        comps = tuple(rng.randrange(m.n) for _ in range(order))
        ks.extend(RenMap.single(order, x, comps, mpq(rng.randint(-3, 3) or 1, rng.randint(1, 5))).kernels)
    return RenMap(ks)


@register("rg.z_axioms", "rg", "Lie R_c axioms", "counterterm axioms",
          "z(F + <Phi,psi> + c) = z(F) + z(c); z commutes with field derivatives; supp z(F) within supp F; z(F) = 0 when supp F misses supp z; additivity on disjoint supports")
def _zax(env):
    m, rng = env.m, env.rng

    def trial():
        Z = _rand_renmap(rng, m)
        F = rand_F(rng, m, 5, 4)
        psi = [rng.randint(-3, 3) for _ in m.vars]
        v = rng.choice(m.vars)
        pairs = [("shift", Z.z(F + m.pairing(psi)), Z.z(F)),
                 ("field_independence", Z.z(F.dfield(v)), Z.z(F).dfield(v)),
                 ("Z_shift", Z.apply(F + m.pairing(psi)), Z.apply(F) + m.pairing(psi))]
        if len(m.sites) > 1:
            x, y = m.sites[0], m.sites[-1]
            Fx, Fy = rand_F(rng, m, 3, 4, {x}), rand_F(rng, m, 3, 4, {y})
            pairs.append(("additivity", Z.apply(Fx + Fy), Z.apply(Fx) + Z.apply(Fy) ))
        off = [x for x in m.sites if x not in Z.support()]
        if off:
            pairs.append(("disjoint", Z.z(rand_F(rng, m, 3, 4, set(off))), 0))
        r = _eq("rg.z_axioms", pairs)
        if not support(Z.z(F)) <= support(F):
            r.status = "fail"
            r.extra["failing"] = r.extra.get("failing", []) + ["support"]
        return r, {"Z": Z, "F": F}
    return _collect("rg.z_axioms", [trial() for _ in range(env.cfg.trials)])


@register("rg.z_group", "rg", "eq:Z-perturbative", "renormalization group law",
          "Z o Z^-1 = id, id o Z = Z, (Z1 o Z2)(F) = Z1(Z2(F))")
def _zgroup(env):
    m, rng = env.m, env.rng

    def trial():
        Z1, Z2 = _rand_renmap(rng, m), _rand_renmap(rng, m)
        F = rand_F(rng, m, 5, 4)
        return _eq("rg.z_group", [
            ("inverse", Z1.compose(Z1.inverse()).apply(F), F),
            ("identity", RenMap().compose(Z1).apply(F), Z1.apply(F)),
            ("compose", Z1.compose(Z2).apply(F), Z1.apply(Z2.apply(F))),
        ]), {"Z1": Z1, "Z2": Z2, "F": F}
    return _collect("rg.z_group", [trial() for _ in range(env.cfg.trials)])


@register("rg.lieR_bracket", "rg", "eq:[qX,qY]", "Lie R_c bracket",
          "[z1,z2] is antisymmetric, [z,z] = 0, and linear counterterm maps commute")
def _lier(env):
    m, rng = env.m, env.rng
    ctx = env.ctxs()[1]

    def trial():
        X, Y = rand_lie(rng, m), rand_lie(rng, m)
        F = as_series(rand_F(rng, m, 3, 3), env.K)
        D1, D2 = anomaly_map(ctx, X), anomaly_map(ctx, Y)
        Z1, Z2 = _rand_renmap(rng, m), _rand_renmap(rng, m)
        return _eq("rg.lieR_bracket", [
            ("antisymmetry", lieR_bracket(D1, D2, F), -lieR_bracket(D2, D1, F)),
            ("self", lieR_bracket(D1, D1, F), 0),
            ("linear", lieR_bracket(Z1.apply, Z2.apply, F), 0),
        ]), {"X": X, "Y": Y, "F": F}
    return _collect("rg.lieR_bracket", [trial() for _ in range(max(4, env.cfg.trials // 4))])


@register("rg.dX_on_z", "rg", "derivative of Lie R_c maps", "action of d_X on Lie R_c",
          "(d_X z)(F) = d_X(z(F)) - <z'(F), d_X(F+L)> equals d/dlam at 0 of g_* z(g_L^-1 F)")
def _dxz(env):
    m, rng = env.m, env.rng

    def trial():
        X = rand_lie(rng, m)
        Z = _rand_renmap(rng, m)
        F = rand_F(rng, m, 3, 3)
        return check_dX_on_z_two_ways(env.ctxs()[0], X, Z.apply, F), {"X": X, "Z": Z, "F": F}
    return _collect("rg.dX_on_z", [trial() for _ in range(max(4, env.cfg.trials // 4))])


@register("rg.amwi", "rg", "eq:AMWI-q", "anomalous Master Ward Identity",
          "T-hat(e^{iF}(d_X F + d_X L_q - Delta X(F)))[phi] = 0 on shell, q = M phi, both contexts")
def _amwi(env):
    m, rng = env.m, env.rng

    def trial(ctx):
        X = rand_lie(rng, m)
        F = rand_F(rng, m, 3, 3)
        phi = [rng.randint(-2, 2) for _ in m.vars]
        return check_AMWI(ctx, X, F, phi, env.K), {"X": X, "F": F, "phi": phi, "twisted": ctx.twisted}
    return _collect("rg.amwi", [trial(c) for c in env.ctxs() for _ in range(max(3, env.cfg.trials // 4))])


@register("rg.sigma", "rg", "eq:anomMWI", "Jacobian anomaly sign",
          "on M1 untwisted, X = (1, 0): Delta X(F) = i sigma, F-independent; sigma is frozen in a golden file")
def _sigma(env):
    m1 = env.model("M1")
    ctx = Deformation(m1)
    X = LieSymmetry(1, {0: [[1]]})
    rng = env.rng
    vals = [solve_anomaly(ctx, X, rand_F(rng, m1, 3, 3), 3) for _ in range(3)]
    consts = {str(v) for v in vals}
    d = vals[0]
    c = d.degree0().constant_term()
    ok = len(consts) == 1 and d.degree0().is_constant() and not (d - FormalSeries.constant(c, d.params, d.caps)).coeffs \
        and c.re == 0 and abs(c.im) == 1
    r = CheckResult.from_bool("rg.sigma", ok, sigma=int(c.im))
    r.extra["golden"] = {"sigma": int(c.im)}
    return r


@register("rg.twisted_anomaly", "rg", "eq:Delta-X", "twisted anomaly regression",
          "z = (1/3) d^2/dphi0^2 on M1, F = eps phi0^3, X = (1,0): Delta X(F) through eps^2, frozen in a golden file")
def _tw_anom(env):
    m1 = env.model("M1")
    ctx = twist(m1, RenMap.single(2, 0, (0, 0), mpq(1, 3)))
    X = LieSymmetry(1, {0: [[1]]})
    d = solve_anomaly(ctx, X, GradedPoly.var(field(0)) ** 3, 2)
    phi_dep = any(not c.is_constant() for c in d.coeffs.values())
    r = CheckResult.from_bool("rg.twisted_anomaly", phi_dep)
    r.extra["golden"] = {"anomaly": d.to_json()}
    return r


@register("rg.anomaly_props", "rg", "lem:prop", "properties of the anomaly map",
          "X -> Delta X is linear; Delta X(F + <Phi,psi> + c) = Delta X(F); in the twisted context Delta X(F) - Delta X(0) is supported in supp F and supp X")
def _aprops(env):
    m, rng = env.m, env.rng

    def trial(ctx):
        X, Y = rand_lie(rng, m), rand_lie(rng, m)
        F = rand_F(rng, m, 3, 3)
        psi = [rng.randint(-2, 2) for _ in m.vars]
        K = env.K
        D = lambda Z, G: solve_anomaly(ctx, Z, G, K)
        pairs = [("linear", D(X + Y.scale(2), F), D(X, F) + D(Y, F).scale(2)),
                 ("shift", D(X, F + m.pairing(psi) + GradedPoly.const(3)), D(X, F))]
        r = _eq("rg.anomaly_props", pairs)
        if ctx.twisted and len(m.sites) > 1:
            # single-site probes: the lattice analogue of common locality
            x, y = m.sites[0], m.sites[-1]
            Xy = rand_lie(rng, m, sites=[y])
            Fx = rand_F(rng, m, 3, 3, {x})
            loc = D(Xy, Fx) - D(Xy, GradedPoly())
            Xx = rand_lie(rng, m, sites=[x])
            inner = D(Xx, Fx) - D(Xx, GradedPoly())
            if not loc.is_zero() or not support(_flat(inner)) <= {x}:
                r.status = "fail"
                r.extra["failing"] = r.extra.get("failing", []) + ["locality"]
        return r, {"X": X, "Y": Y, "F": F, "twisted": ctx.twisted}
    return _collect("rg.anomaly_props", [trial(c) for c in env.ctxs() for _ in range(max(3, env.cfg.trials // 4))])


def _flat(s: FormalSeries) -> GradedPoly:
    out = GradedPoly()
    for c in s.coeffs.values():
        out = out + c
    return out


def _wz_trials(env):
    m, rng = env.m, env.rng
    ctx = env.ctxs()[1]
    for _ in range(env.cfg.trials):
        X, Y = rand_lie(rng, m), rand_lie(rng, m)
        # phi_x^4 at a twisted site makes Delta X(F) reach the F-dependent part of Delta Y
        x = min(ctx.Z.support()) if ctx.twisted else m.sites[0]
        quart = GradedPoly.var(field(x)) ** 4
        F = as_series(rand_F(rng, m, 3, 3) + quart.scale(rng.choice([1, -1, 2])), env.K)
        yield ctx, X, Y, F


@register("wz.extended", "rg", "eq:WZ-0", "extended Wess-Zumino consistency condition",
          "Delta[X,Y](F) = <DY'(F), DX(F)> - <DX'(F), DY(F)> + d_X DY(F) - d_Y DX(F) - <DY'(F), d_X(L+F)> + <DX'(F), d_Y(L+F)>, twisted context")
def _wz(env):
    items = []
    for ctx, X, Y, F in _wz_trials(env):
        t = wz0_terms(ctx, X, Y, F)
        items.append((check_extended_WZ(ctx, X, Y, F, terms=t), {"X": X, "Y": Y, "F": F}))
    return _collect("wz.extended", items)


@register("wz.lie", "rg", "eq:WZ", "Lie-algebraic cocycle relation",
          "Delta[X,Y] = -[DX, DY] + d_X DY - d_Y DX in Lie R_c, term by term equal to the extended condition, twisted context")
def _wzlie(env):
    items = []
    first = None
    for ctx, X, Y, F in _wz_trials(env):
        t = wz0_terms(ctx, X, Y, F)
        r = check_lie_cocycle(ctx, X, Y, F, terms=t)
        if first is None and not FormalSeries.lift(t["lhs"]).is_zero():
            first = residual_summary(t["lhs"])["first_nonzero"]
        r.extra["lhs_nonzero"] = not FormalSeries.lift(t["lhs"]).is_zero()
        items.append((r, {"X": X, "Y": Y, "F": F}))
    out = _collect("wz.lie", items)
    out.extra["first_nonzero_lhs"] = first
    return out


@register("rg.relation_q", "rg", "eq:relation-q", "representation identity for q",
          "q([X,Y]) = [q(X),q(Y)] + [r(X),q(Y)] - [r(Y),q(X)] on nonlinear evaluation test functions")
def _relq(env):
    m, rng = env.m, env.rng

    def trial(ctx):
        X, Y = rand_lie(rng, m), rand_lie(rng, m)
        F = as_series(rand_F(rng, m, 3, 3), 2)
        phis = [m.config([rng.randint(-2, 2) for _ in m.vars]) for _ in range(2)]
        return check_relation_q(ctx, X, Y, F, phis), {"X": X, "Y": Y, "F": F}
    return _collect("rg.relation_q", [trial(c) for c in env.ctxs() for _ in range(2)])


# ============================================================================
# bv
# ============================================================================

def _eta_mv(rng, m, k, max_deg=1, n_terms=3):
    """A random even multivector field: (polynomial in phi of degree <= max_deg) phi# eta_k."""
    out = GradedPoly()
    for _ in range(n_terms):
        v = rng.choice(m.vars)
        coef = random_poly(rng, list(m.vars), 2, max_deg)
        out = out + coef * GradedPoly.var(antifield(v.site, v.comp))
    return out * GradedPoly.var(eta(k))


@register("bv.conventions", "bv", "eq:antibracket", "sign conventions",
          "{phi#_0, phi_0} = -1, lap(phi_0 phi#_0) = -1, s_0(phi#_0) = -(M phi)_0")
def _conv(env):
    m1 = env.model("M1")
    p, a = GradedPoly.var(field(0)), GradedPoly.var(antifield(0))
    r = _eq("bv.conventions", [
        ("bracket", bv.antibracket(a, p), GradedPoly.const(-1)),
        ("laplacian", bv.laplacian(p * a), GradedPoly.const(-1)),
        ("s0", bv.s0(m1, a), -m1.eom(0)),
    ])
    r.extra["golden"] = {"bracket": "-1", "laplacian": "-1"}
    return r


@register("bv.nilpotency", "bv", "eq:sF2=0", "nilpotency of the BV operators",
          "s_F^2 = 0, s-hat_0^2 = 0, s-hat_F^2 = 0 and lap^2 = 0 on random multivector fields through eps^4, both contexts")
def _nil(env):
    m, rng = env.m, env.rng
    K = max(env.K, 4)

    def trial(ctx):
        X = random_poly(rng, list(m.vars) + _antifields(m), 4, 3, 2)
        F = as_series(rand_F(rng, m, 3, 3), K)
        return _eq("bv.nilpotency", [
            ("s_F", bv.s_classical(m, F, bv.s_classical(m, F, X)), 0),
            ("s_hat_0", bv.s_hat0(ctx, bv.s_hat0(ctx, X)), 0),
            ("s_hat_F", bv.s_hat(ctx, F, bv.s_hat(ctx, F, X)), 0),
            ("laplacian", bv.laplacian(bv.laplacian(X)), 0),
        ]), {"X": X, "F": F, "twisted": ctx.twisted}
    return _collect("bv.nilpotency", [trial(c) for c in env.ctxs() for _ in range(max(3, env.cfg.trials // 4))])


@register("bv.regular_laplacian", "bv", "eq:BVLapnr", "BV Laplacian on regular functionals",
          "untwisted: lap_F X = lap X for random F and X")
def _reglap(env):
    m, rng = env.m, env.rng
    ctx = env.ctxs()[0]

    def trial():
        X = random_poly(rng, list(m.vars) + _antifields(m), 4, 3, 2)
        F = as_series(rand_F(rng, m, 3, 3), env.K)
        return _res("bv.regular_laplacian", FormalSeries.lift(bv.lap_F(ctx, F, X)) - bv.laplacian(X)), {"X": X, "F": F}
    return _collect("bv.regular_laplacian", [trial() for _ in range(max(3, env.cfg.trials // 4))])


@register("bv.anomaly_routes", "bv", "eq:DeltaX-LapF", "anomaly cross-oracle",
          "Delta X(F) from the Ward identity equals i lap_F(d_X) and -<A'(F), d_X>, both contexts")
def _routes(env):
    rng = env.rng
    items = []
    models = [env.model("M1"), env.model("M2")] if env.m.name in ("M1", "M2") else [env.m]
    per = max(1, -(-env.cfg.trials // (2 * len(models))))
    for m in models:
        for ctx in env.ctxs(m):
            for _ in range(per):
                X = rand_lie(rng, m)
                F = as_series(rand_F(rng, m, 3, 3), env.K)
                items.append((bv.check_anomaly_routes(ctx, X, F), {"model": m.name, "X": X, "F": F, "twisted": ctx.twisted}))
    return _collect("bv.anomaly_routes", items)


@register("bv.jacobi", "bv", "eq:Jacobi-brackets", "generalized Jacobi identity",
          "[e^{iX}, [e^{iX}]^F]^F = 0 for random even X with one antifield factor, both contexts")
def _jac(env):
    m, rng = env.m, env.rng

    def trial(ctx):
        X = _eta_mv(rng, m, 1, 2)
        F = as_series(rand_F(rng, m, 3, 3), env.K)
        return bv.check_generalized_jacobi(ctx, F, X), {"X": X, "F": F, "twisted": ctx.twisted}
    return _collect("bv.jacobi", [trial(c) for c in env.ctxs() for _ in range(2)])


@register("bv.ccbv", "bv", "eq:CCBV", "BV consistency relation",
          "0 = {L+F, A(F)} + <A'(F), (1/2){L+F,L+F} + A(F)> for random F with antifield number <= 1, both contexts")
def _ccbv(env):
    m, rng = env.m, env.rng

    def trial(ctx):
        F = as_series(rand_F(rng, m, 3, 3), env.K) + _eta_mv(rng, m, 1, 2, 2)
        return bv.check_ccbv(ctx, F), {"F": F, "twisted": ctx.twisted}
    return _collect("bv.ccbv", [trial(c) for c in env.ctxs() for _ in range(2)])


@register("bv.bracket_table", "bv", "eq:def-brackets", "L-infinity brackets",
          "[-]_0 = 0, [X]_1 = s-hat_F X, [X,X]_2 = -i({X,X} + <A''(F), X X>), [X,X,X]_3 = -<A'''(F), X X X>")
def _table(env):
    m, rng = env.m, env.rng

    def trial(ctx):
        X = _eta_mv(rng, m, 1, 2, 2)
        F = as_series(rand_F(rng, m, 3, 3), env.K)
        t = FormalSeries.param("tau", 3)
        A = bv.solve_bv_anomaly(ctx, F + t * X)
        A2 = A.drop("tau", 2).scale(Scalar(2))
        A3 = A.drop("tau", 3).scale(Scalar(6))
        return _eq("bv.bracket_table", [
            ("0", bv.linf_bracket(ctx, F, []), 0),
            ("1", bv.linf_bracket(ctx, F, [X]), bv.s_hat(ctx, F, X)),
            ("2", bv.linf_bracket(ctx, F, [X, X]), (FormalSeries.lift(bv.antibracket(X, X)) + A2).scale(-I)),
            ("3", bv.linf_bracket(ctx, F, [X, X, X]), A3.scale(-ONE)),
        ]), {"X": X, "F": F, "twisted": ctx.twisted}
    return _collect("bv.bracket_table", [trial(c) for c in env.ctxs() for _ in range(2)])


@register("bv.qme", "bv", "eq:QME", "quantum master equation",
          "both forms of the QME agree; antifield-free F satisfies it")
def _qme(env):
    m, rng = env.m, env.rng
    items = []
    for ctx in env.ctxs():
        F = as_series(rand_F(rng, m, 3, 3), env.K)
        q = bv.check_qme(ctx, F)
        items.append((CheckResult.from_bool("bv.qme", q["s0_form"] and q["bracket_form"]), {"F": F}))
        G = F + _eta_mv(rng, m, 1, 1, 2)
        q = bv.check_qme(ctx, G)
        items.append((CheckResult.from_bool("bv.qme", q["s0_form"] == q["bracket_form"]), {"F": G}))
    return _collect("bv.qme", items)


@register("bv.lemma_aux", "bv", "eq:aux-1", "single-contraction lemma",
          "(G (M phi)_j) ._T Y = (G ._T Y)(M phi)_j + i G dY/dphi_j for Y at most linear in phi")
def _aux(env):
    m, rng = env.m, env.rng

    def trial(ctx):
        G = random_poly(rng, list(m.vars) + _antifields(m), 3, 3, 1)
        Y = random_poly(rng, list(m.vars) + _antifields(m), 3, 1, 1)
        return bv.check_lemma_aux(ctx, G, Y), {"G": G, "Y": Y}
    return _collect("bv.lemma_aux", [trial(env.ctxs()[0]) for _ in range(max(3, env.cfg.trials // 4))])


@register("bv.laplace_product", "bv", "eq:DeltaF(XY)", "BV Laplacian on products",
          "lap_F(XY) = (lap_F X) Y + X lap_F Y + {X, Y} for at most linear even X, Y and QME-satisfying F, both contexts")
def _lprod(env):
    m, rng = env.m, env.rng

    def trial(ctx, F):
        X, Y = _eta_mv(rng, m, 1), _eta_mv(rng, m, 2)
        return bv.check_laplace_product(ctx, F, X, Y), {"X": X, "Y": Y, "F": F}
    items = []
    for ctx in env.ctxs():
        for F in (FormalSeries.constant(0), as_series(rand_F(rng, m, 3, 3), env.K)):
            items.append(trial(ctx, F))
    return _collect("bv.laplace_product", items)


@register("bv.A_second_order", "bv", "Prop secondorder", "second-order anomaly vanishes",
          "the lam mu coefficient of A(F + lam X + mu Y) vanishes for at most linear X, Y and QME-satisfying F")
def _a2(env):
    m, rng = env.m, env.rng
    items = []
    for ctx in env.ctxs():
        for F in (FormalSeries.constant(0), as_series(rand_F(rng, m, 3, 3), env.K)):
            X, Y = _eta_mv(rng, m, 1), _eta_mv(rng, m, 2)
            items.append((bv.check_A_second_order(ctx, F, X, Y), {"X": X, "Y": Y, "F": F}))
    return _collect("bv.A_second_order", items)


@register("bv.closing_remark", "bv", "lap^2 = 0 on products", "unrenormalized product identity",
          "{lap Y, X} + {lap X, Y} + lap{X, Y} = 0 for even regular X, Y")
def _closing(env):
    m, rng = env.m, env.rng

    def trial():
        X, Y = _eta_mv(rng, m, 1, 2), _eta_mv(rng, m, 2, 2)
        return bv.check_closing_remark(X, Y), {"X": X, "Y": Y}
    return _collect("bv.closing_remark", [trial() for _ in range(env.cfg.trials)])


@register("bv.bv_implies_wz", "bv", "Prop BV->WZ", "BV consistency implies Wess-Zumino",
          "the eta1 eta2 coefficient of the BV consistency relation at F + d_X eta1 + d_Y eta2 splits into the three parts of the extended condition; A(F) = -DX eta1 - DY eta2")
def _bvwz(env):
    m, rng = env.m, env.rng
    items = []
    for ctx in env.ctxs():
        for _ in range(2):
            X, Y = rand_lie(rng, m), rand_lie(rng, m)
            F = as_series(rand_F(rng, m, 3, 3), env.K)
            t = wz0_terms(ctx, X, Y, F)
            r = bv.check_bv_implies_wz(ctx, F, X, Y, terms=t)
            wz = check_extended_WZ(ctx, X, Y, F, terms=t)
            if not wz.ok:
                r.status = "fail"
                r.extra["wz_residual"] = wz.residual
            items.append((r, {"X": X, "Y": Y, "F": F, "twisted": ctx.twisted}))
    return _collect("bv.bv_implies_wz", items)


# ============================================================================
# cocycle
# ============================================================================

def _coc_inputs(env, m=None):
    m = m or env.m
    rng = env.rng
    X = rand_lie(rng, m, lo=-1, hi=1)
    F = as_series(rand_F(rng, m, 3, 3), env.K)
    return X, F


@register("cocycle.identity", "cocycle", "eq:DGL-Z-1", "cocycle at the identity",
          "zeta at lam = 0 is the identity; zeta_e = id")
def _cid(env):
    items = []
    for ctx in env.ctxs():
        X, F = _coc_inputs(env)
        items.append((cocycle.check_zeta_identity(ctx, X, F, env.cfg.K_lam), {"X": X, "F": F}))
        zero = LieSymmetry(env.m.n)
        items.append((cocycle.check_zeta_identity(ctx, zero, F, env.cfg.K_lam), {"X": "0", "F": F}))
    return _collect("cocycle.identity", items)


@register("cocycle.derivative", "cocycle", "eq:Delta-X", "tangent of the cocycle",
          "d/dlam at 0 of zeta_{exp(lam X)}(F) = Delta X(F)")
def _cder(env):
    items = []
    for ctx in env.ctxs():
        X, F = _coc_inputs(env)
        items.append((cocycle.check_zeta_derivative(ctx, X, F, env.cfg.K_lam), {"X": X, "F": F}))
    return _collect("cocycle.derivative", items)


@register("cocycle.affine", "cocycle", "anomaly is affine", "affine anomaly",
          "Delta X(F) = c_X + B_X(F) with B_X linear, checked against the Ward-identity solver on probes")
def _caff(env):
    m, rng = env.m, env.rng
    items = []
    for ctx in env.ctxs():
        X = rand_lie(rng, m)
        probes = [rand_F(rng, m, 3, 3) for _ in range(3)]
        items.append((cocycle.check_affine_anomaly(ctx, X, probes), {"X": X, "probes": probes}))
    return _collect("cocycle.affine", items)


@register("cocycle.uamwi", "cocycle", "eq:uni-anom-MWI", "unitary anomalous Ward identity",
          "S(g_{L_q} F)[phi] = S(zeta_g F)[phi] as joint (eps, lam) series, q = M phi, both contexts")
def _uamwi(env):
    rng = env.rng
    items = []
    for ctx in env.ctxs():
        X, F = _coc_inputs(env)
        phi = [rng.randint(-2, 2) for _ in env.m.vars]
        items.append((cocycle.check_UAMWI(ctx, X, F, phi, env.K, env.cfg.K_lam),
                      {"X": X, "F": F, "phi": phi, "twisted": ctx.twisted}))
    return _collect("cocycle.uamwi", items)


@register("cocycle.group", "cocycle", "eq:cocycle", "group cocycle relation",
          "zeta_{gh} = zeta_h h_L^-1 zeta_g h_L along exp(lam X), exp(mu Y), exact through the (lam, mu) caps")
def _cgroup(env):
    rng = env.rng
    items = []
    for ctx in env.ctxs():
        X, F = _coc_inputs(env)
        Y = rand_lie(rng, env.m, lo=-1, hi=1)
        items.append((cocycle.check_group_cocycle(ctx, X, Y, F, (env.cfg.K_lam, env.cfg.K_mu)),
                      {"X": X, "Y": Y, "F": F, "twisted": ctx.twisted}))
    return _collect("cocycle.group", items)


@register("cocycle.q_independence", "cocycle", "q-independence", "source independence",
          "the integrated cocycle is bit-identical for two distinct sources q")
def _cq(env):
    rng = env.rng
    items = []
    for ctx in env.ctxs():
        X, F = _coc_inputs(env)
        q1 = [rng.randint(-3, 3) for _ in env.m.vars]
        q2 = [rng.randint(-3, 3) for _ in env.m.vars]
        items.append((cocycle.check_q_independence(ctx, X, F, q1, q2, env.cfg.K_lam), {"X": X, "F": F}))
    return _collect("cocycle.q_independence", items)


@register("cocycle.support", "cocycle", "support of zeta", "support of the cocycle",
          "zeta_g(F + G) = zeta_g(F) + G and the conjugate zeta_g^h likewise, for supp G disjoint from supp g; constant and linear shifts pass through")
def _csupp(env):
    m, rng = env.m, env.rng
    if len(m.sites) < 2:
        return CheckResult.from_bool("cocycle.support", True, skipped="needs two sites")
    items = []
    x, y = m.sites[0], m.sites[-1]
    for ctx in env.ctxs():
        X = rand_lie(rng, m, sites=[x], lo=-1, hi=1)
        z = cocycle.integrate_zeta(ctx, X, env.cfg.K_lam)
        F = rand_F(rng, m, 3, 3)
        G = rand_F(rng, m, 3, 3, {y}) if not ctx.twisted or y not in ctx.Z.support() else GradedPoly()
        h = GroupElement(m.n, {y: [[2 if i == j else 0 for j in range(m.n)] for i in range(m.n)]})
        items.append((cocycle.check_zeta_support(ctx, z, F, G), {"X": X, "F": F, "G": G}))
        items.append((cocycle.check_zeta_support(ctx, z, F, G, h=h), {"X": X, "F": F, "G": G, "h": h}))
        psi = [rng.randint(-2, 2) for _ in m.vars]
        items.append((_res("cocycle.support", z(F + m.pairing(psi) + GradedPoly.const(2)) - z(F) - m.pairing(psi)
                           - GradedPoly.const(2)), {"X": X, "F": F, "psi": psi}))
    return _collect("cocycle.support", items)


@register("cocycle.closed_form", "cocycle", "closed form of zeta", "closed-form cocycle",
          "zeta_g = Z^-1 g_L^-1 Z g_L + C_g: the path integration matches it, and rational elements obey the cocycle relation")
def _ccf(env):
    m, rng = env.m, env.rng
    items = []
    for ctx in env.ctxs():
        X, F = _coc_inputs(env)
        items.append((cocycle.check_closed_form(ctx, X, F, env.cfg.K_lam), {"X": X, "F": F}))
        g, h = _unimodular(rng, m), _unimodular(rng, m)
        items.append((cocycle.check_element_cocycle(ctx, g, h, F), {"g": g, "h": h, "F": F}))
    return _collect("cocycle.closed_form", items)


def _unimodular(rng, m) -> GroupElement:
    """A random element with det A(x) = 1 at every site, shifts and a permutation."""
    A = {}
    for x in m.sites:
        t = rng.randint(-2, 2)
        mat = [[1 if i == j else 0 for j in range(m.n)] for i in range(m.n)]
        if m.n > 1:
            mat[0][m.n - 1] = t
        A[x] = mat
    psi = {x: [rng.randint(-2, 2) for _ in range(m.n)] for x in m.sites}
    rho = None
    if len(m.sites) > 1:
        a, b = m.sites[0], m.sites[1]
        rho = {a: b, b: a}
    return GroupElement(m.n, A, psi, rho)


@register("cocycle.wz", "cocycle", "eq:cocycle1", "cocycle and Lie cocycle",
          "the antisymmetrized lam mu coefficient of the group cocycle equals Delta[X,Y](F)")
def _cwz(env):
    rng = env.rng
    items = []
    ctx = env.ctxs()[1]
    X, F = _coc_inputs(env)
    Y = rand_lie(rng, env.m, lo=-1, hi=1)
    items.append((cocycle.check_cocycle_wz(ctx, X, Y, F), {"X": X, "Y": Y, "F": F}))
    return _collect("cocycle.wz", items)


# ============================================================================
# gauge
# ============================================================================

class _GaugeData:
    """Model, connection, rotations and paths for the gauge suite."""

    def __init__(self, env):
        cfg, rng = env.cfg, env.rng
        g = cfg.gauge
        self.m = model_from_json(g.get("model", "G1"))
        m = self.m
        if m.n < 2 or not m.edges:
            raise ConfigError("the gauge suite needs a graph model with n >= 2")
        self.ctxs = cfg.contexts(m) if "twist" not in g else [Deformation(m), twist(m, _renmap(g["twist"]))]
        if "connection" in g:
            W = {tuple(int(s) for s in k.split("-")): v for k, v in g["connection"].items()}
        else:
            W = {}
            for e in m.edges:
                if rng.random() < 0.7:
                    W[e] = [[mpq(int(i == j)) + mpq(rng.randint(-2, 2), rng.randint(2, 4)) for j in range(m.n)]
                            for i in range(m.n)]
            W = {e: w for e, w in W.items() if _det_ok(w)}
        self.A = gauge.Connection(m, W)
        triples = [(3, 4, 5), (5, 12, 13), (8, 15, 17), (7, 24, 25)]

        def rot(x):
            i, j = sorted(rng.sample(range(m.n), 2))
            return gauge.OrthoGauge.rotation(m.n, x, i, j, rng.choice(triples))
        self.rot = rot
        self.rng = rng

    def path(self, sites, param, cap):
        X = rand_lie(self.rng, self.m, shift=False, sites=sites, antisym=True, lo=-1, hi=1)
        return gauge.GaugePath(self.m.n, X.a, param, cap)


def _det_ok(w):
    import sympy
    return sympy.Matrix([[sympy.Rational(int(e.numerator), int(e.denominator)) for e in r] for r in w]).det() != 0


def _renmap(items):
    from .config import renmap_from_json
    return renmap_from_json(items)


def _gdata(env):
    return _GaugeData(env)


def _perturbation(rng, n):
    return [[mpq(rng.randint(-2, 2), rng.randint(1, 3)) for _ in range(n)] for _ in range(n)]


@register("gauge.covariance", "gauge", "eq:LAg", "gauge covariance",
          "L_{A^g}(g phi) = L_A(phi) and g_* L_A = L_{A^g} for rational rotations g and random transports")
def _gcov(env):
    d = _gdata(env)
    m, rng = d.m, env.rng
    items = []
    for _ in range(max(3, env.cfg.trials // 4)):
        g = d.rot(rng.choice(m.sites)) * d.rot(rng.choice(m.sites))
        phi = [rng.randint(-3, 3) for _ in m.vars]
        items.append((gauge.check_covariance(m, g, d.A, phi), {"g": g, "A": d.A, "phi": phi}))
    return _collect("gauge.covariance", items)


@register("gauge.composition", "gauge", "gauge composition", "composition of gauge transformations",
          "(A^h)^g = A^{gh} and V(A^g) = g_L V(A)")
def _gcomp(env):
    d = _gdata(env)
    m, rng = d.m, env.rng
    items = []
    for _ in range(max(3, env.cfg.trials // 4)):
        g, h = d.rot(rng.choice(m.sites)), d.rot(rng.choice(m.sites)) * d.rot(rng.choice(m.sites))
        items.append((gauge.check_transform_composition(g, h, d.A), {"g": g, "h": h, "A": d.A}))
        items.append((gauge.check_V_transform(d.ctxs[0], g, d.A), {"g": g, "A": d.A}))
    return _collect("gauge.composition", items)


@register("gauge.G_cocycle", "gauge", "eq:Cc-G(g)", "cocycle relation of the gauge anomaly",
          "frak G(gh, A) = frak G(g, A^h) + frak G(h, A) for rational rotations and for exp(lam X), exp(mu Y) paths, both contexts")
def _gcoc(env):
    d = _gdata(env)
    m, rng = d.m, env.rng
    items = []
    for ctx in d.ctxs:
        g, h = d.rot(rng.choice(m.sites)), d.rot(rng.choice(m.sites))
        items.append((gauge.check_G_cocycle(ctx, g, h, d.A), {"g": g, "h": h, "A": d.A}))
        gp = d.path([rng.choice(m.sites)], "lam", env.cfg.K_lam)
        hp = d.path([rng.choice(m.sites)], "mu", env.cfg.K_mu)
        items.append((gauge.check_G_cocycle(ctx, gp, hp, d.A), {"g": gp.X, "h": hp.X, "A": d.A}))
    return _collect("gauge.G_cocycle", items)


@register("gauge.G_locality", "gauge", "eq:G-local", "locality of the gauge anomaly",
          "mixed second differences of zeta on disjoint supports vanish: A-A, g-A and g-g probes")
def _gloc(env):
    d = _gdata(env)
    m, rng = d.m, env.rng
    if len(m.edges) < 3:
        raise ValueError("locality probes need a path with at least three edges")
    e_first, e_last = m.edges[0], m.edges[-1]
    x0 = e_first[0]
    x3 = e_last[1]
    items = []
    for ctx in d.ctxs:
        h = d.rot(rng.choice(m.sites))
        w1 = {e_first: _perturbation(rng, m.n)}
        w2 = {e_last: _perturbation(rng, m.n)}
        g0, g3 = d.rot(x0), d.rot(x3)
        probes = {"AA": (h, w1, w2), "gA": (g0, h, w2), "gg": (g0, g3, h)}
        items.append((gauge.check_G_locality(ctx, d.A, probes), {"h": h, "g1": g0, "g2": g3, "A": d.A}))
        hp = d.path([rng.choice(m.sites)], "lam", 2)
        g0p, g3p = d.path([x0], "mu", 2), d.path([x3], "tau", 2)
        probes = {"AA": (hp, w1, w2), "gA": (g0p, hp, w2), "gg": (g0p, g3p, hp)}
        items.append((gauge.check_G_locality(ctx, d.A, probes), {"paths": True, "A": d.A}))
    return _collect("gauge.G_locality", items)


@register("gauge.WZ", "gauge", "eq:Cc-G(X)", "Wess-Zumino consistency relation",
          "d_X G(Y) - d_Y G(X) = G([X,Y]) with G(X) = -Delta X(V(A)) and d_X G(Y) = <DY'(V), d_X(L+V)>; the four terms with Delta X(V) inside vanish for quadratic V")
def _gwz(env):
    d = _gdata(env)
    rng = env.rng
    items = []
    models = [(d.m, d.A, d.ctxs)]
    if d.m.n < 3:
        # so(2) is abelian; a 3-component model gives a nonzero bracket
        m3 = model_from_json("G3")
        A3 = gauge.Connection(m3, {m3.edges[-1]: [[1, mpq(1, 2), 0], [0, 1, mpq(1, 3)], [0, 0, 1]]})
        tw3 = twist(m3, RenMap([RenMap.single(2, m3.sites[1], c, mpq(1, k)).kernels[0]
                                for c, k in (((0, 1), 3), ((1, 1), 5), ((0, 2), 7))]))
        models.append((m3, A3, [Deformation(m3), tw3]))
    for m, A, ctxs in models:
        for ctx in ctxs:
            x = rng.choice(m.sites[1:-1] or m.sites)
            for _ in range(20):
                X = rand_lie(rng, m, shift=False, sites=[x], antisym=True, lo=-1, hi=1)
                Y = rand_lie(rng, m, shift=False, sites=[x], antisym=True, lo=-1, hi=1)
                if not lie_bracket(X, Y).is_zero() or m.n < 3:
                    break
            pairs = [(X, Y)]
            if m.n >= 3 and ctx.twisted:
                # rotations in the (0,1) and (1,2) planes: their bracket meets the (0,2) kernel
                L = lambda i, j: [[(1 if (r, c) == (i, j) else -1 if (r, c) == (j, i) else 0) for c in range(m.n)]
                                  for r in range(m.n)]
                pairs.append((LieSymmetry(m.n, {x: L(0, 1)}), LieSymmetry(m.n, {x: L(1, 2)})))
            for X, Y in pairs:
                items.append((gauge.check_WZ_gauge(ctx, X, Y, A, min(env.K, 2)),
                              {"model": m.name, "X": X, "Y": Y, "A": A, "twisted": ctx.twisted}))
    return _collect("gauge.WZ", items)


@register("gauge.phibar_independence", "gauge", "eq:WZa", "effective action shift",
          "Gamma(A^g, g phibar) - Gamma(A, phibar) = frak G(g, A) for two backgrounds phibar, both contexts")
def _gphi(env):
    d = _gdata(env)
    m, rng = d.m, env.rng
    items = []
    for ctx in d.ctxs:
        g = d.rot(rng.choice(m.sites))
        pbs = [[rng.randint(-2, 2) for _ in m.vars] for _ in range(2)]
        items.append((gauge.check_gamma_shift(ctx, g, d.A, pbs, min(env.K, 2)), {"g": g, "A": d.A, "phibar": pbs}))
    return _collect("gauge.phibar_independence", items)


@register("gauge.effective_action", "gauge", "eq:Gamma(A,varphi)", "effective action",
          "the Gaussian closed form of log S-hat(V + <Phi,J>)[0] agrees with the Wick expansion; Gamma(0, 0) = 0")
def _geff(env):
    d = _gdata(env)
    m, rng = d.m, env.rng
    items = []
    for ctx in d.ctxs:
        V = gauge.potential(m, d.A)
        J = [rng.randint(-2, 2) for _ in m.vars]
        F = as_series(V + m.pairing(J), 2)
        items.append((gauge.check_gaussian_closed_form(ctx, F), {"A": d.A, "J": J, "twisted": ctx.twisted}))
    zero = gauge.effective_action(d.ctxs[0], gauge.Connection(m), [0] * m.size, 2)
    items.append((_res("gauge.effective_action", zero), {"A": "0"}))
    return _collect("gauge.effective_action", items)
