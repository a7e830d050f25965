"""Auxiliary Lagrange systems for the gradient ridge and their plane curves.

On the branch ``y = f(x)`` the pair ``(y, u) = (f(x), |grad f(x)|^2)``
satisfies ``P(x, y) = 0`` and ``G(x, y, u) = 0`` with

    G = sum_i (dP/dx_i)^2 - (dP/dy)^2 * u.

Adding the condition that ``x`` minimises ``|grad f|`` within its level set
(gradients of ``f`` and ``|grad f|^2`` parallel, or coplanar with ``x`` on
the boundary sphere) gives a system whose projection to the ``(y, u)``
plane is a curve ``Q(y, u) = 0``.  The degree and Newton polygon of ``Q``
constrain the gradient exponent.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bounds import s_bound, total_degree_product
from .polycore import NEG_INF, Polynomial, factor, partial, render, resultant

log = logging.getLogger(__name__)

CURVE_NAMES = ("y", "u")
MAX_BRANCHES = 256
DEFAULT_CAP = 12


class EliminationError(RuntimeError):
    pass


class ResultantCollapse(EliminationError):
    """Every elimination branch degenerated; no curve was produced."""


class AmbiguousInterpolation(EliminationError):
    def __init__(self, message, candidates):
        super().__init__(message)
        self.candidates = candidates


class ResidualTooLarge(EliminationError):
    pass


def x_names(n):
    return tuple(f"x{i + 1}" for i in range(n))


def system_names(n, route="k"):
    names = x_names(n) + CURVE_NAMES
    if route == "tz":
        names += tuple(f"t{i + 1}" for i in range(n)) + tuple(f"z{i + 1}" for i in range(n))
    return names


@dataclass(frozen=True)
class Generator:
    label: str
    poly: Polynomial
    nominal_degree: int


@dataclass
class EliminationSystem:
    case: str
    route: str
    n: int
    d: int
    generators: list
    radius: float | None = None
    center: tuple | None = None

    @property
    def names(self):
        return self.generators[0].poly.names

    @property
    def polys(self):
        return [g.poly for g in self.generators]

    @property
    def degree_budget(self):
        """Product of the generator degree bounds in terms of ``d = deg P``."""
        return total_degree_product([g.nominal_degree for g in self.generators])

    @property
    def actual_degree_product(self):
        degs = [g.poly.total_degree for g in self.generators if not g.poly.is_zero()]
        return total_degree_product([max(1, k) for k in degs])

    @property
    def fact_5_7_bound(self):
        return s_bound(self.n, max(self.d, 1))

    def labels(self):
        return [g.label for g in self.generators]


def _lift(P, names):
    n = P.nvars - 1
    return P.with_names(x_names(n) + ("y",)).embed(names)


def build_G(P: Polynomial, names=None) -> Polynomial:
    """``sum (dP/dx_i)^2 - (dP/dy)^2 * u`` in the ring ``(x, y, u, ...)``."""
    n = P.nvars - 1
    if P.is_constant():
        raise ValueError("P must be non-constant")
    names = names or system_names(n)
    Pl = _lift(P, names)
    ui = names.index("u")
    yi = n
    u = Polynomial.var(ui, len(names), names)
    G = Polynomial.zero(len(names), names)
    for i in range(n):
        px = partial(Pl, i)
        G = G + px * px
    py = partial(Pl, yi)
    return G - py * py * u


def _det3(cols, rows):
    (a, b, c) = cols
    i, j, k = rows
    return (a[i] * (b[j] * c[k] - b[k] * c[j])
            - a[j] * (b[i] * c[k] - b[k] * c[i])
            + a[k] * (b[i] * c[j] - b[j] * c[i]))


def _centered_x(names, n, center):
    out = []
    for i in range(n):
        xi = Polynomial.var(i, len(names), names)
        c = Fraction(center[i]).limit_denominator(10**12) if center is not None else 0
        out.append(xi - c if c else xi)
    return out


def build_case_I_system(P: Polynomial, route="k", use_k3=False) -> EliminationSystem:
    """Interior-ridge system.

    ``route="k"`` uses ``P``, ``G`` and the 2x2 minors of the gradients of
    ``P`` and ``G`` in ``x``.  ``route="tz"`` introduces the gradient ``t``
    and the scaled gradient ``z`` of ``|grad f|^2`` as extra variables.
    """
    n = P.nvars - 1
    d = int(P.total_degree)
    if route not in ("k", "tz"):
        raise ValueError(f"unknown route {route!r}")
    names = system_names(n, route)
    Pl = _lift(P, names)
    G = build_G(P, names)
    gens = [Generator("P", Pl, d), Generator("G", G, 2 * d - 1)]
    if route == "k":
        Px = [partial(Pl, i) for i in range(n)]
        Gx = [partial(G, i) for i in range(n)]
        for i, j in itertools.combinations(range(n), 2):
            K = Px[i] * Gx[j] - Px[j] * Gx[i]
            gens.append(Generator(f"K4_{i + 1}{j + 1}", K, 3 * d - 3))
    else:
        gens += _tz_generators(Pl, G, names, n, d, use_k3)
        for i, j in itertools.combinations(range(n), 2):
            t, z = _tz_vars(names, n)
            gens.append(Generator(f"G4_{i + 1}{j + 1}", t[i] * z[j] - z[i] * t[j], 2))
    return EliminationSystem("I", route, n, d, gens)


def _tz_vars(names, n):
    m = len(names)
    t = [Polynomial.var(names.index(f"t{i + 1}"), m, names) for i in range(n)]
    z = [Polynomial.var(names.index(f"z{i + 1}"), m, names) for i in range(n)]
    return t, z


def _tz_generators(Pl, G, names, n, d, use_k3=False):
    m = len(names)
    u = Polynomial.var(names.index("u"), m, names)
    t, z = _tz_vars(names, n)
    Py = partial(Pl, n)
    Gy = partial(G, n)
    g1 = u
    for ti in t:
        g1 = g1 - ti * ti
    gens = [Generator("G1", g1, 2)]
    for i in range(n):
        Pxi = partial(Pl, i)
        gens.append(Generator(f"G2_{i + 1}", Pxi + Py * t[i], d))
    for i in range(n):
        Pxi = partial(Pl, i)
        Gxi = partial(G, i)
        if use_k3:
            gens.append(Generator(f"K3_{i + 1}", Gxi * Py - Gy * Pxi - Py * Py * Py * z[i], 3 * d - 2))
        else:
            gens.append(Generator(f"G3_{i + 1}", Gxi + Gy * t[i] - Py * Py * z[i], 2 * d - 1))
    return gens


def build_case_II_system(P: Polynomial, r, route="k", center=None, use_k3=False) -> EliminationSystem:
    """Boundary-ridge system on the sphere ``|x - center| = r``."""
    n = P.nvars - 1
    if n < 2:
        raise ValueError("the boundary system needs n >= 2; use the one-dimensional path for n = 1")
    if not r > 0:
        raise ValueError("radius must be positive")
    d = int(P.total_degree)
    names = system_names(n, route)
    Pl = _lift(P, names)
    G = build_G(P, names)
    xs = _centered_x(names, n, center)
    rr = Fraction(r).limit_denominator(10**12)
    G0 = Polynomial.zero(len(names), names)
    for xi in xs:
        G0 = G0 + xi * xi
    G0 = G0 - rr * rr
    gens = [Generator("P", Pl, d), Generator("G0", G0, 2), Generator("G", G, 2 * d - 1)]
    if route == "k":
        Px = [partial(Pl, i) for i in range(n)]
        Gx = [partial(G, i) for i in range(n)]
        for tri in itertools.combinations(range(n), 3):
            K = _det3((Px, Gx, xs), tri)
            gens.append(Generator("K4_" + "".join(str(i + 1) for i in tri), K, 3 * d - 2))
    elif route == "tz":
        gens += _tz_generators(Pl, G, names, n, d, use_k3)
        t, z = _tz_vars(names, n)
        for tri in itertools.combinations(range(n), 3):
            gens.append(Generator("G4_" + "".join(str(i + 1) for i in tri), _det3((t, z, xs), tri), 3))
    else:
        raise ValueError(f"unknown route {route!r}")
    return EliminationSystem("II", route, n, d, gens, radius=float(r),
                             center=tuple(center) if center is not None else None)


# -- curves --------------------------------------------------------------------------

@dataclass
class PlaneCurve:
    Q: Polynomial
    factors: list
    provenance: str
    budget: int | None = None
    residual: float | None = None
    discarded: list = field(default_factory=list)
    label: str = ""
    zero_dimensional: bool = False

    def __post_init__(self):
        if self.Q.is_zero():
            raise ValueError("curve polynomial must be nonzero")

    @property
    def D(self):
        return int(self.Q.total_degree)

    def as_dict(self):
        out = {
            "Q": render(self.Q),
            "D": self.D,
            "factors": [[render(f), m] for f, m in self.factors],
            "provenance": self.provenance,
        }
        if self.budget is not None:
            out["budget"] = self.budget
        if self.residual is not None:
            out["residual"] = self.residual
        if self.discarded:
            out["discarded"] = [render(f) for f in self.discarded]
        if self.label:
            out["label"] = self.label
        if self.zero_dimensional:
            out["zero_dimensional"] = True
        return out


@dataclass(frozen=True)
class ExponentCandidates:
    slopes: tuple
    lemma58: Fraction


def lemma58_bound(curve) -> Fraction:
    """``1 - 1/D`` for even ``D`` and ``1 - 1/(D + 1)`` for odd ``D``."""
    Q = curve.Q if isinstance(curve, PlaneCurve) else curve
    D = Q.total_degree
    if D == NEG_INF or D < 1:
        raise ValueError("curve degree must be at least 1")
    return 1 - Fraction(1, D if D % 2 == 0 else D + 1)


def slope_candidates(curve) -> ExponentCandidates:
    """Ratios ``(S1 - S) / (2 (N - N1))`` over monomial pairs ``u^N y^S``.

    Only values in the open interval (0, 1) are kept.
    """
    Q = curve.Q if isinstance(curve, PlaneCurve) else curve
    yi, ui = Q.names.index("y"), Q.names.index("u")
    monos = sorted({(e[ui], e[yi]) for e in Q.terms})
    out = set()
    for (N, S), (N1, S1) in itertools.combinations(monos, 2):
        if N == N1:
            continue
        s = Fraction(S1 - S, 2 * (N - N1))
        if 0 < s < 1:
            out.add(s)
    lem = lemma58_bound(Q) if Q.total_degree >= 1 else None
    return ExponentCandidates(tuple(sorted(out)), lem)


def relative_residual(Q: Polynomial, points):
    """``max_j |Q(p_j)| / sum_m |c_m m(p_j)|`` over the given ``(y, u)`` points.

    Scaling by the monomial magnitudes keeps tiny levels meaningful.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if not len(pts):
        return 0.0
    yi, ui = Q.names.index("y"), Q.names.index("u")
    num = np.zeros(len(pts))
    den = np.zeros(len(pts))
    for e, c in Q.terms.items():
        m = float(c) * pts[:, 0] ** e[yi] * pts[:, 1] ** e[ui]
        num += m
        den += np.abs(m)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(den > 0, np.abs(num) / den, 0.0)
    return float(rel.max())


def coefficient_residual(Q: Polynomial, points):
    """``max_j |Q(p_j)| / (1 + sum |c|)``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if not len(pts):
        return 0.0
    yi, ui = Q.names.index("y"), Q.names.index("u")
    vals = np.zeros(len(pts))
    for e, c in Q.terms.items():
        vals += float(c) * pts[:, 0] ** e[yi] * pts[:, 1] ** e[ui]
    return float(np.abs(vals).max() / (1 + sum(abs(float(c)) for c in Q.terms.values())))


# -- symbolic elimination ------------------------------------------------------------

def _irreducible(p: Polynomial):
    if p.is_zero():
        return []
    _, facs = factor(p)
    return [f.primitive() for f, _ in facs if not f.is_constant()]


def _split(polys):
    """Decompose ``V(polys)`` into systems of irreducible polynomials."""
    todo = [list(polys)]
    done = []
    while todo:
        system = todo.pop()
        if any(p.is_constant() and not p.is_zero() for p in system):
            continue
        system = [p for p in system if not p.is_zero()]
        facs = [_irreducible(p) for p in system]
        single = [fs[0] for fs in facs if len(fs) == 1]
        multi = [fs for fs in facs if len(fs) > 1]
        if not multi:
            done.append(list(dict.fromkeys(single)))
            continue
        # a factor that already appears in the system satisfies its product
        known = set(single)
        pending = [fs for fs in multi if not known.intersection(fs)]
        if not pending:
            done.append(list(dict.fromkeys(single)))
            continue
        first, rest = pending[0], pending[1:]
        for g in first:
            todo.append(single + [g] + [p for fs in rest for p in ([] if g in fs else [_prod(fs)])])
        if len(todo) + len(done) > MAX_BRANCHES:
            raise EliminationError(f"more than {MAX_BRANCHES} elimination branches")
    return done


def _prod(fs):
    out = fs[0]
    for f in fs[1:]:
        out = out * f
    return out


def _eliminate_branch(system, elim_vars):
    """Eliminate ``elim_vars`` from an irreducible system; returns final systems."""
    stack = [(system, tuple(elim_vars))]
    finals = []
    while stack:
        polys, remaining = stack.pop()
        if not remaining:
            finals.append(polys)
            continue
        # ascending by degree: smallest Sylvester matrices first
        def cost(v):
            degs = [p.degree(v) for p in polys if p.degree(v) not in (0, NEG_INF)]
            return (max(degs) if degs else 0, len(degs), v)

        v = min(remaining, key=cost)
        rest = tuple(w for w in remaining if w != v)
        with_v = [p for p in polys if p.degree(v) not in (0, NEG_INF)]
        without = [p for p in polys if p.degree(v) in (0, NEG_INF)]
        if len(with_v) <= 1:
            stack.append((without, rest))
            continue
        pivot = min(with_v, key=lambda p: (p.degree(v), len(p), render(p)))
        res = []
        for q in with_v:
            if q is pivot:
                continue
            r = resultant(pivot, q, v)
            if not r.is_zero():
                res.append(r)
        for sub in _split(without + res):
            stack.append((sub, rest))
        if len(stack) + len(finals) > MAX_BRANCHES:
            raise EliminationError(f"more than {MAX_BRANCHES} elimination branches")
    return finals


def _curve_ring(p: Polynomial):
    return p.restrict(CURVE_NAMES)


def _vanishes_on(fct: Polynomial, points, tol):
    return relative_residual(fct, points) <= tol if len(points) else True


def eliminate_resultant(system: EliminationSystem, profile_points=None, tol=1e-6):
    """Eliminate every non-curve variable with iterated resultants.

    Extraneous factors are dropped when they do not involve ``u``, do not
    pass through the origin of the ``(y, u)`` plane (only for curves), or do
    not vanish at any supplied profile point.
    """
    if system.n > 3:
        raise EliminationError("resultant elimination is limited to n <= 3")
    names = system.names
    elim = [i for i, nm in enumerate(names) if nm not in CURVE_NAMES]
    polys = [p for p in system.polys if not p.is_zero()]
    curves, points_sets = [], []
    for branch in _split(polys):
        for final in _eliminate_branch(branch, elim):
            final = [_curve_ring(p) for p in final]
            if not final:
                continue  # projection fills the plane
            facs = [set(_irreducible(p)) for p in final]
            common = set.intersection(*facs)
            if common:
                curves.extend(common)
            else:
                points_sets.append(final)
    pts = [] if profile_points is None else list(profile_points)
    discarded = []
    if curves:
        kept = []
        for fct in sorted(set(curves), key=render):
            ok = len(fct.used_variables() & {1}) > 0
            ok = ok and fct.constant_value() == 0
            ok = ok and any(_vanishes_on(fct, [p], tol) for p in pts) if pts else ok
            (kept if ok else discarded).append(fct)
        if not kept:
            raise ResultantCollapse("every curve factor was discarded as extraneous")
        zero_dim = False
    elif points_sets:
        kept = []
        for final in points_sets:
            with_u = [p for p in final if 1 in p.used_variables()]
            if not with_u:
                continue
            only_u = [p for p in with_u if p.used_variables() == {1}]
            pick = min(only_u or with_u, key=lambda p: (p.total_degree, render(p)))
            kept.extend(_irreducible(pick))
        kept = sorted(set(kept), key=render)
        if not kept:
            raise ResultantCollapse("projection is empty or independent of u")
        zero_dim = True
    else:
        raise ResultantCollapse("all resultants vanished identically; generators share a component")
    Q = _prod(kept)
    Q = _orient(Q.primitive())
    curve = PlaneCurve(Q, [(f, 1) for f in kept], "symbolic-resultant", budget=system.degree_budget,
                       discarded=discarded, zero_dimensional=zero_dim)
    if pts:
        curve.residual = coefficient_residual(Q, pts)
    return curve


def _orient(Q: Polynomial):
    """Sign convention: the term with the highest power of ``u`` is positive."""
    ui = Q.names.index("u")
    yi = Q.names.index("y")
    e = max(Q.terms, key=lambda e: (e[ui], -e[yi]))
    return -Q if Q.terms[e] < 0 else Q


# -- numeric elimination -------------------------------------------------------------

def _monomials(D):
    return [(a, b) for tot in range(D + 1) for b in range(tot + 1) for a in [tot - b]]


def interpolate_curve(points, max_degree=DEFAULT_CAP, sv_tol=1e-9, residual_tol=1e-6,
                      denominator=10**6, budget=None):
    """Lowest-degree ``Q(y, u)`` vanishing on ``points`` (least-squares null space).

    Columns are scaled to unit norm so tiny levels do not make monomials
    look degenerate.  Coefficients are rounded to rationals when that keeps
    the residual within tolerance.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 3:
        raise EliminationError("need at least three profile points")
    ys = max(np.abs(pts[:, 0]).max(), 1e-300)
    us = max(np.abs(pts[:, 1]).max(), 1e-300)
    yn, un = pts[:, 0] / ys, pts[:, 1] / us
    for D in range(1, max_degree + 1):
        monos = _monomials(D)
        if len(monos) > len(pts):
            break
        A = np.stack([yn ** a * un ** b for a, b in monos], axis=1)
        norms = np.linalg.norm(A, axis=0)
        norms[norms == 0] = 1.0
        _, s, Vt = np.linalg.svd(A / norms, full_matrices=False)
        small = np.flatnonzero(s <= sv_tol * s[0])
        if not len(small):
            continue
        cands = [_vec_to_poly(Vt[k] / norms, monos, ys, us, denominator, pts) for k in small]
        if len(small) > 1:
            raise AmbiguousInterpolation(f"{len(small)} independent curves of degree {D} fit the profile",
                                         [render(c) for c in cands])
        Q = cands[0]
        res = coefficient_residual(Q, pts)
        if res > residual_tol:
            raise ResidualTooLarge(f"interpolated curve residual {res:.3g} exceeds {residual_tol:.3g}")
        return PlaneCurve(Q, [(Q, 1)], "numeric-interpolation", budget=budget, residual=res)
    # nothing vanished: report the best fit at the highest degree reached
    monos = _monomials(min(max_degree, _max_fit_degree(len(pts))))
    A = np.stack([yn ** a * un ** b for a, b in monos], axis=1)
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    _, s, Vt = np.linalg.svd(A / norms, full_matrices=False)
    Q = _vec_to_poly(Vt[-1] / norms, monos, ys, us, denominator, pts)
    return PlaneCurve(Q, [(Q, 1)], "numeric-interpolation", budget=budget,
                      residual=coefficient_residual(Q, pts),
                      label="curve degree >= cap, degree bound not certified, slopes still valid as candidates")


def _max_fit_degree(npts):
    D = 1
    while len(_monomials(D + 1)) <= npts:
        D += 1
    return D


def _vec_to_poly(v, monos, ys, us, denominator, pts):
    # undo the variable scaling: c * (y/ys)^a (u/us)^b
    coef = np.array([c / (ys ** a * us ** b) for c, (a, b) in zip(v, monos)])
    k = int(np.argmax(np.abs(v)))
    coef = coef / coef[k]
    big = np.abs(coef).max()
    coef[np.abs(coef) < 1e-10 * big] = 0.0
    exact = {(a, b): Fraction(c).limit_denominator(denominator) for c, (a, b) in zip(coef, monos) if c}
    raw = {(a, b): Fraction(c) for c, (a, b) in zip(coef, monos) if c}
    Qe = _orient(Polynomial(2, exact, CURVE_NAMES).primitive())
    Qr = _orient(Polynomial(2, raw, CURVE_NAMES))
    if coefficient_residual(Qe, pts) <= max(10 * coefficient_residual(Qr, pts), 1e-12):
        return Qe
    return Qr


def eliminate_to_curve(system: EliminationSystem, method="resultant", branch=None, cap=DEFAULT_CAP,
                       profile=None, **profile_kw):
    """Plane curve of ``system`` by resultants or by interpolating a sampled profile."""
    if method == "resultant":
        pts = None
        if profile is not None:
            pts = profile.points()
        return eliminate_resultant(system, pts)
    if method != "interpolate":
        raise ValueError(f"unknown method {method!r}")
    Dmax = min(system.degree_budget, cap)
    if profile is None:
        if branch is None:
            raise ValueError("interpolation needs a branch to sample")
        from .empirical import sample_interpolation_profile

        need = (Dmax + 1) * (Dmax + 2) // 2
        profile = sample_interpolation_profile(branch, need, **profile_kw)
    curve = interpolate_curve(profile.points(), max_degree=Dmax, budget=system.degree_budget)
    if Dmax < system.degree_budget and curve.label:
        log.info("interpolation capped at degree %d", Dmax)
    return curve
