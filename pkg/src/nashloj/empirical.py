"""Sampling the gradient ridge and fitting empirical exponents.

For each level ``y`` the sampler looks for the smallest ``|grad f|^2`` on
the level set ``{f = y}`` inside the ball, which is where the gradient
inequality is tightest.  Regressing ``log |grad f|`` on ``log |f|`` over a
geometric ladder of levels gives the exponent estimate.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import cKDTree

from .nashfn import BranchError, NashBranch, critical_value_scan
from .regions import Ball, as_region

log = logging.getLogger(__name__)

LEVEL_RTOL = 1e-10
LAGRANGE_TOL = 1e-6
DEFAULT_STARTS = 32
DEFAULT_LEVELS = 10


class SamplingError(RuntimeError):
    pass


class LevelUnreachable(SamplingError):
    pass


class FitError(RuntimeError):
    pass


class SparseZeroSet(RuntimeError):
    pass


@dataclass
class LevelRecord:
    y: float
    u: float
    argmin: tuple
    starts_used: int
    converged: bool
    lagrange_residual: float
    on_boundary: bool

    def as_dict(self):
        return asdict(self)


@dataclass
class CriticalProfile:
    levels: list
    epsilon: float
    center: tuple
    radius: float

    def converged(self):
        return [lv for lv in self.levels if lv.converged]

    def points(self):
        return np.array([(lv.y, lv.u) for lv in self.converged()], dtype=float).reshape(-1, 2)

    def signs(self):
        return sorted({1 if lv.y > 0 else -1 for lv in self.levels}, reverse=True)

    def as_dict(self):
        return {
            "epsilon": self.epsilon,
            "center": list(self.center),
            "radius": self.radius,
            "levels": [lv.as_dict() for lv in self.levels],
        }


# -- level-set geometry ----------------------------------------------------------------

class _Evaluator:
    """Per-start evaluator with its own continuation state.

    Optimisers ask for the objective, the constraint and its Jacobian at the
    same point, so the last few jets are memoised.
    """

    def __init__(self, branch: NashBranch, memo=8):
        self.tr = branch.tracker()
        self.memo = memo
        self.cache = {}

    def jet(self, x, order=1):
        x = np.asarray(x, dtype=float)
        key = x.tobytes()
        hit = self.cache.get(key)
        if hit is not None and hit[0] >= order:
            return hit[1]
        out = self.tr.jet(x, order=2)
        if len(self.cache) >= self.memo:
            self.cache.pop(next(iter(self.cache)))
        self.cache[key] = (2, out)
        return out


def project_to_level(ev, x, y, ball: Ball, max_iter=60):
    """Newton projection onto ``{f = y}`` along the gradient, with damping.

    Returns the projected point or ``None`` when it fails or leaves the ball.
    """
    x = np.array(x, dtype=float)
    tol = LEVEL_RTOL * abs(y)
    for _ in range(max_iter):
        try:
            f, g, _ = ev.jet(x)
        except BranchError:
            return None
        r = f - y
        if abs(r) <= tol:
            return x if ball.contains(x, slack=1e-12) else None
        gg = float(g @ g)
        if gg == 0.0 or not math.isfinite(gg):
            return None
        step = r * g / gg
        t = 1.0
        for _ in range(30):
            xn = x - t * step
            if ball.contains(xn, slack=1e-12):
                try:
                    fn = ev.jet(xn)[0]
                except BranchError:
                    fn = math.inf
                if abs(fn - y) < abs(r):
                    break
            t *= 0.5
        else:
            return None
        x = xn
    return None


def lagrange_residual(ev, x, ball: Ball, boundary_tol=1e-6):
    """Stationarity of ``|grad f|^2`` on the level set through ``x``.

    Returns ``(residual, on_boundary)``; boundary points also allow the
    normal of the sphere in the multiplier span.
    """
    f, g, H = ev.jet(x, order=2)
    grad_u = 2.0 * H @ g
    on_b = bool(ball.on_boundary(x, rtol=boundary_tol))
    cols = [g]
    if on_b:
        cols.append(np.asarray(x) - np.asarray(ball.center))
    A = np.stack(cols, axis=1)
    lam, *_ = np.linalg.lstsq(A, grad_u, rcond=None)
    res = float(np.linalg.norm(grad_u - A @ lam) / (1.0 + np.linalg.norm(grad_u)))
    return res, on_b


def minimize_on_level(ev, x0, y, ball: Ball):
    """Minimise ``|grad f|^2`` over ``{f = y}`` in the ball starting at ``x0``."""
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    center = np.asarray(ball.center)
    r2 = ball.radius ** 2

    def u_of(x):
        g = ev.jet(x)[1]
        return float(g @ g)

    best = x0
    best_u = u_of(x0)
    if n > 1:
        def obj(x):
            try:
                _, g, H = ev.jet(x, order=2)
            except BranchError:
                return 1e3, np.zeros(n)
            u = float(g @ g)
            if u <= 0:
                return -1e3, np.zeros(n)
            return math.log(u), 2.0 * (H @ g) / u

        def con(x):
            try:
                return ev.jet(x)[0] / y - 1.0
            except BranchError:
                return 1.0

        def con_jac(x):
            try:
                return ev.jet(x)[1] / y
            except BranchError:
                return np.zeros(n)

        cons = [
            {"type": "eq", "fun": con, "jac": con_jac},
            {"type": "ineq", "fun": lambda x: r2 - float((x - center) @ (x - center)),
             "jac": lambda x: -2.0 * (x - center)},
        ]
        try:
            res = minimize(obj, x0, jac=True, method="SLSQP", constraints=cons,
                           options={"ftol": 1e-14, "maxiter": 100})
            cand = project_to_level(ev, res.x, y, ball)
        except (ValueError, BranchError, FloatingPointError):
            cand = None
        if cand is not None:
            cu = u_of(cand)
            if cu < best_u:
                best, best_u = cand, cu
    return best, best_u


def _chain(branch, start, ys, ball):
    """Follow one start down the level ladder; returns per-level (u, x) or None."""
    ev = _Evaluator(branch)
    out = []
    x = np.asarray(start, dtype=float)
    for y in ys:
        px = project_to_level(ev, x, y, ball)
        if px is None:
            out.append(None)
            continue
        xm, um = minimize_on_level(ev, px, y, ball)
        out.append((um, xm))
        x = xm
    return out


def _level_signs(branch: NashBranch, ball: Ball, seed):
    pts = ball.low_discrepancy(512, seed=seed + 1)
    vals = branch.values(pts, errors="nan")
    vals = vals[np.isfinite(vals)]
    signs = []
    if np.any(vals > 0):
        signs.append(1)
    if np.any(vals < 0):
        signs.append(-1)
    return signs


def _profile(branch, ys_by_sign, starts, ball, seed, threads):
    pts = ball.low_discrepancy(starts, seed=seed)
    records = []
    for sign, ys in ys_by_sign.items():
        work = [(branch, p, ys, ball) for p in pts]
        if threads and threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                chains = list(pool.map(lambda a: _chain(*a), work))
        else:
            chains = [_chain(*a) for a in work]
        recs = []
        for j, y in enumerate(ys):
            hits = [(c[j][0], k, c[j][1]) for k, c in enumerate(chains) if c[j] is not None]
            if not hits:
                recs.append(LevelRecord(float(y), math.nan, (), starts, False, math.nan, False))
                continue
            # deterministic reduction: smallest u, ties broken by start index
            u, _, x = min(hits, key=lambda h: (h[0], h[1]))
            ev = _Evaluator(branch)
            try:
                res, on_b = lagrange_residual(ev, x, ball)
            except BranchError:
                res, on_b = math.inf, False
            recs.append(LevelRecord(float(y), float(u), tuple(float(v) for v in x), starts,
                                    bool(res <= LAGRANGE_TOL), float(res), on_b))
        if not any(math.isfinite(r.u) for r in recs):
            raise LevelUnreachable(f"no level of sign {sign:+d} was reached inside the ball")
        records.extend(recs)
    records.sort(key=lambda r: (-abs(r.y), -r.y))
    return records


def sample_profile(branch: NashBranch, center=None, epsilon=None, level_count=DEFAULT_LEVELS,
                   starts=DEFAULT_STARTS, seed=0, threads=None, radius=None):
    """Per-level minima of ``|grad f|^2`` on levels ``+-epsilon * 2^-j``."""
    if level_count < 8:
        raise ValueError("level_count must be at least 8")
    if starts < 8:
        raise ValueError("starts must be at least 8")
    ball = Ball(tuple(center) if center is not None else branch.seed_x, radius or branch.radius)
    if epsilon is None:
        epsilon = critical_value_scan(branch).epsilon
    signs = _level_signs(branch, ball, seed)
    if not signs:
        raise LevelUnreachable("f does not leave zero inside the ball")
    ys = {s: [s * epsilon * 2.0 ** -j for j in range(1, level_count + 1)] for s in signs}
    records = _profile(branch, ys, starts, ball, seed, threads)
    return CriticalProfile(records, float(epsilon), tuple(ball.center), float(ball.radius))


def sample_interpolation_profile(branch: NashBranch, count, epsilon=None, starts=8, seed=0,
                                 decades=6.0, threads=None):
    """Dense log-spaced ladder of ``count`` levels per sign for curve fitting."""
    ball = branch.region
    if epsilon is None:
        epsilon = critical_value_scan(branch).epsilon
    signs = _level_signs(branch, ball, seed)
    if not signs:
        raise LevelUnreachable("f does not leave zero inside the ball")
    mags = np.geomspace(epsilon / 2, epsilon / 2 * 10.0 ** -decades, count)
    ys = {s: [float(s * m) for m in mags] for s in signs}
    records = _profile(branch, ys, starts, ball, seed, threads)
    return CriticalProfile(records, float(epsilon), tuple(ball.center), float(ball.radius))


# -- exponent fitting --------------------------------------------------------------

@dataclass
class ExponentFit:
    rho_hat: float
    C_hat: float
    residual: float
    level_range: tuple
    method: str
    per_sign: dict = field(default_factory=dict)
    negative_slope: bool = False

    def as_dict(self):
        return {
            "rho_hat": self.rho_hat,
            "C_hat": self.C_hat,
            "residual": self.residual,
            "level_range": list(self.level_range),
            "method": self.method,
            "per_sign": self.per_sign,
            "negative_slope": self.negative_slope,
        }


def _slope(xs, ys, method):
    if method == "least-squares":
        A = np.stack([xs, np.ones_like(xs)], axis=1)
        (a, b), *_ = np.linalg.lstsq(A, ys, rcond=None)
        return float(a), float(b)
    if method == "robust-median-slope":
        i, j = np.triu_indices(len(xs), k=1)
        keep = xs[i] != xs[j]
        a = float(np.median((ys[j] - ys[i])[keep] / (xs[j] - xs[i])[keep]))
        return a, float(np.median(ys - a * xs))
    raise ValueError(f"unknown fit method {method!r}")


def fit_exponent(profile: CriticalProfile, method="least-squares"):
    """Fit ``|grad f| ~ C |f|^rho`` over the converged levels.

    Each sign is fitted separately; the reported exponent is the larger one
    and ``C_hat`` is the largest constant that works at every level.
    """
    conv = [lv for lv in profile.converged() if lv.u > 0 and lv.y != 0]
    if len(conv) < 4:
        raise FitError(f"need at least 4 converged levels, got {len(conv)}")
    per_sign = {}
    for s in (1, -1):
        lv = [r for r in conv if (r.y > 0) == (s > 0)]
        if len(lv) < 4:
            continue
        lx = np.log(np.abs([r.y for r in lv]))
        ly = 0.5 * np.log([r.u for r in lv])
        a, b = _slope(lx, ly, method)
        rms = float(np.sqrt(np.mean((ly - (a * lx + b)) ** 2)))
        per_sign["+" if s > 0 else "-"] = {"rho_hat": a, "log_C0": b, "residual": rms, "levels": len(lv)}
    if not per_sign:
        raise FitError("no sign has 4 converged levels")
    worst = max(per_sign, key=lambda k: per_sign[k]["rho_hat"])
    rho = per_sign[worst]["rho_hat"]
    ay = np.abs([r.y for r in conv])
    su = np.sqrt([r.u for r in conv])
    C = float(np.min(su / ay ** rho))
    return ExponentFit(
        rho_hat=float(rho),
        C_hat=C,
        residual=float(per_sign[worst]["residual"]),
        level_range=(float(ay.min()), float(ay.max())),
        method=method,
        per_sign=per_sign,
        negative_slope=bool(rho < 0),
    )


# -- zero set and distance exponents -------------------------------------------------

def _jets(branch: NashBranch, X, Y=None):
    if branch.explicit is not None:
        f, g, _ = branch.jet_at(X)
        return np.asarray(f), np.asarray(g)
    if Y is None:
        Y = branch.values(X, errors="nan")
    good = np.isfinite(Y)
    g = np.full(X.shape, np.nan)
    if good.any():
        _, gg, _ = branch.jet_at(X[good], y=Y[good])
        g[good] = gg
    return Y, g


def zero_set_sample(branch: NashBranch, region=None, size=10_000, seed=0, max_iter=200):
    """Points of ``f = 0`` reached by damped Newton descents from a scrambled grid."""
    region = as_region(region or branch.region)
    if isinstance(region, Ball):
        # half uniform, half log-radial so the sample stays dense near the centre
        half = size // 2
        U = region.low_discrepancy(size - half, seed=seed)
        rng = np.random.default_rng(seed)
        w = rng.standard_normal((half, region.dim))
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        rad = region.radius * 10.0 ** rng.uniform(-5, 0, size=half)
        X = np.concatenate([U, np.asarray(region.center) + w * rad[:, None]])
        scale = region.radius
    else:
        X = region.uniform(size, np.random.default_rng(seed))
        scale = float(np.max(np.asarray(region.hi) - np.asarray(region.lo)))
    f, g = _jets(branch, X)
    alive = np.isfinite(f) & np.all(np.isfinite(g), axis=1)
    done = np.zeros(len(X), dtype=bool)
    for _ in range(max_iter):
        act = alive & ~done
        if not act.any():
            break
        gg = np.einsum("ij,ij->i", g[act], g[act])
        with np.errstate(all="ignore"):
            step = (f[act] / gg)[:, None] * g[act]
        bad = ~np.all(np.isfinite(step), axis=1) | (gg == 0)
        Xa = X[act] - np.where(bad[:, None], 0.0, step)
        Ya = None if branch.explicit is not None else branch.values_near(Xa, f[act])
        fa, ga = _jets(branch, Xa, Ya)
        idx = np.flatnonzero(act)
        X[idx] = Xa
        f[idx], g[idx] = fa, ga
        small = np.linalg.norm(step, axis=1) <= 1e-10 * scale
        done[idx] |= small | (np.abs(fa) <= 1e-300)
        alive[idx] &= ~bad & np.isfinite(fa)
    keep = alive & done & region.contains(X, slack=1e-9)
    return X[keep]


@dataclass
class DistanceFit:
    alpha_hat: float
    C: float
    diagnostics: dict

    def as_dict(self):
        return {"alpha_hat": self.alpha_hat, "C": self.C, "diagnostics": self.diagnostics}


def fit_distance_exponent(branch: NashBranch, region=None, zero_set_sample_size=10_000, seed=0,
                          quantity="f", bins=12, offsets=4, vsample=None):
    """Fit ``alpha`` in ``|f(x)| >= C dist(x, V)^alpha`` (or the same for ``|grad f|``).

    ``dist(x, V)`` is the nearest-neighbour distance to a sample of the zero
    set.  Queries sit at log-uniform offsets from zero-set points; per
    distance bin the smallest value is kept and a line is fitted through
    those minima in log-log scale.
    """
    region = as_region(region or branch.region)
    V = zero_set_sample(branch, region, zero_set_sample_size, seed) if vsample is None else vsample
    if len(V) == 0:
        raise SparseZeroSet("zero set sample is empty")
    tree = cKDTree(V)
    rng = np.random.default_rng(seed)
    scale = region.radius if isinstance(region, Ball) else float(np.max(np.subtract(region.hi, region.lo)))
    if len(V) > 1:
        dd, _ = tree.query(V, k=2)
        spacing = float(np.median(dd[:, 1]))
    else:
        spacing = 0.0
    lo = max(10.0 * spacing, 1e-4 * scale)
    hi = 0.1 * scale
    if lo >= hi:
        raise SparseZeroSet(f"zero set sample spacing {spacing:.3g} is too coarse for distance scales below {hi:.3g}")
    # local sample spacing at each anchor: offsets below it cannot be resolved
    kk = min(5, len(V))
    local = tree.query(V, k=kk)[0][:, -1] if kk > 1 else np.zeros(len(V))
    pick = rng.integers(0, len(V), size=len(V) * offsets)
    anchors, aspace = V[pick], local[pick]
    w = rng.standard_normal(anchors.shape)
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    radii = np.exp(rng.uniform(math.log(lo), math.log(hi), size=len(anchors)))
    Xq = anchors + w * radii[:, None]
    inside = region.contains(Xq) & (radii >= 10.0 * aspace)
    Xq = Xq[inside]
    dist, near = tree.query(Xq)
    # the nearest zero must be resolved by the sample and not cut off by the boundary
    inside = (region.dist_to_complement(Xq) >= 2.0 * dist) & (dist >= 10.0 * local[near])
    Xq, dist = Xq[inside], dist[inside]
    f, g = _jets(branch, Xq)
    val = np.abs(f) if quantity == "f" else np.linalg.norm(g, axis=1)
    ok = np.isfinite(val) & (val > 0) & (dist >= lo) & (dist <= hi)
    dist, val = dist[ok], val[ok]
    if len(dist) < 2 * bins:
        raise SparseZeroSet("too few usable query points")
    edges = np.geomspace(lo, hi, bins + 1)
    which = np.digitize(dist, edges) - 1
    bx, by = [], []
    for k in range(bins):
        sel = which == k
        if sel.sum() < 3:
            continue
        j = np.argmin(val[sel])
        bx.append(math.log(dist[sel][j]))
        by.append(math.log(val[sel][j]))
    if len(bx) < 4:
        raise SparseZeroSet("too few populated distance bins")
    bx, by = np.array(bx), np.array(by)
    a, b = _slope(bx, by, "least-squares")
    C = float(np.min(val / dist ** a))
    rms = float(np.sqrt(np.mean((by - (a * bx + b)) ** 2)))
    diag = {
        "quantity": quantity,
        "zero_set_points": int(len(V)),
        "spacing": spacing,
        "distance_range": [lo, hi],
        "bins_used": int(len(bx)),
        "residual": rms,
    }
    return DistanceFit(float(a), C, diag)


# -- direct verification ------------------------------------------------------------

@dataclass
class InequalityReport:
    passed: bool
    worst_margin: float
    violations: list
    samples: int

    def as_dict(self):
        return {"passed": self.passed, "worst_margin": self.worst_margin,
                "violations": len(self.violations), "samples": self.samples}


def verify_inequality(branch: NashBranch, region=None, rho=0.5, C=1.0, sample_count=2000, seed=0,
                      rtol=1e-9, epsilon=None):
    """Check ``|grad f| >= C |f|^rho`` on uniform and level-projected samples.

    The margin at a point is ``|grad f| / (C |f|^rho) - 1``; a violation is a
    margin below ``-rtol``.
    """
    if not 0 <= rho < 1:
        raise ValueError("rho must lie in [0, 1)")
    if not C > 0:
        raise ValueError("C must be positive")
    if sample_count < 1:
        raise ValueError("sample_count must be positive")
    region = as_region(region or branch.region)
    rng = np.random.default_rng(seed)
    X = region.uniform(sample_count, rng)
    if isinstance(region, Ball):
        # add points projected onto small levels, where the inequality is tight
        eps = epsilon
        if eps is None:
            vals = branch.values(X[: min(256, len(X))], errors="nan")
            eps = float(np.nanmax(np.abs(vals))) if np.any(np.isfinite(vals)) else 0.0
        extra = []
        if eps > 0:
            ev = _Evaluator(branch)
            starts = X[: max(1, sample_count // 20)]
            for k, x in enumerate(starts):
                fx = ev.jet(x)[0]
                if fx == 0:
                    continue
                y = math.copysign(eps * 2.0 ** -(1 + k % 12), fx)
                p = project_to_level(ev, x, y, region)
                if p is not None:
                    extra.append(p)
        if extra:
            X = np.concatenate([X, np.array(extra)])
    f, g = _jets(branch, X)
    ok = np.isfinite(f)
    f, g, X = f[ok], g[ok], X[ok]
    lhs = np.linalg.norm(g, axis=1)
    rhs = C * np.abs(f) ** rho
    with np.errstate(divide="ignore", invalid="ignore"):
        margin = np.where(rhs > 0, lhs / rhs - 1.0, np.inf)
    bad = np.flatnonzero(margin < -rtol)
    worst = float(np.min(margin)) if len(margin) else math.nan
    viol = [tuple(float(v) for v in X[i]) for i in bad]
    return InequalityReport(len(bad) == 0, worst, viol, int(len(X)))
