"""Nash functions given as a smooth branch of ``P(x, y) = 0``.

A :class:`NashBranch` stores ``P`` in the variables ``x1..xn, y`` together
with a seed point ``(x0, y0)`` and a ball of radius ``r`` around ``x0``.  The
function value at ``x`` is the root of ``P(x, .)`` obtained by continuing the
seed root along the segment ``x0 -> x``; derivatives follow from implicit
differentiation of ``P(x, f(x)) = 0``.

When ``P = c*y + h(x)`` with a constant ``c`` the branch is the polynomial
``-h/c`` and everything is evaluated directly.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .polycore import NEG_INF, NumericPolys, Polynomial, isolate_real_roots, parse, partial, render
from .regions import Ball

log = logging.getLogger(__name__)

DEFAULT_STEPS = 64
MAX_HALVINGS = 20
FOLD_RTOL = 1e-10


class BranchError(RuntimeError):
    """The branch could not be followed to the requested point."""


class FoldError(BranchError):
    """``dP/dy`` vanished along the continuation path."""

    def __init__(self, message, parameter=None, point=None):
        super().__init__(message)
        self.parameter = parameter
        self.point = point


class NewtonDivergence(BranchError):
    pass


def branch_names(n):
    return tuple(f"x{i + 1}" for i in range(n)) + ("y",)


@dataclass(frozen=True)
class GradientValue:
    value: float
    grad: np.ndarray
    norm_sq: float


@dataclass(frozen=True, eq=False)
class NashBranch:
    """Implicit function branch of ``P(x, y) = 0`` through a seed point.

    Parameters
    ----------
    P : Polynomial
        Polynomial in ``n + 1`` variables, the last one being ``y``.
    seed_x : sequence of float
        Seed abscissa; also the centre of the evaluation ball.
    seed_y : float
        Approximate seed ordinate; Newton-polished on construction.
    radius : float
        Radius of the evaluation ball.
    """

    P: Polynomial
    seed_x: tuple
    seed_y: float
    radius: float
    residual_tol: float = 1e-9
    n: int = field(init=False)

    def __post_init__(self):
        if self.P.is_zero():
            raise ValueError("P must be nonzero")
        n = self.P.nvars - 1
        if n < 1:
            raise ValueError("P needs at least one x variable besides y")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "seed_x", tuple(float(v) for v in self.seed_x))
        if len(self.seed_x) != n:
            raise ValueError(f"seed_x has length {len(self.seed_x)}, expected {n}")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.P.degree(n) in (0, NEG_INF):
            raise ValueError("P must depend on y")
        object.__setattr__(self, "seed_y", self._polish_seed(float(self.seed_y)))

    # -- construction helpers ------------------------------------------------
    @classmethod
    def from_text(cls, text, n, seed_x=None, seed_y=0.0, radius=1.0):
        P = parse(text, branch_names(n))
        if seed_x is None:
            seed_x = (0.0,) * n
        return cls(P, tuple(seed_x), seed_y, radius)

    @classmethod
    def from_function(cls, g_text, n, center=None, radius=1.0):
        """Branch ``y = g(x)`` for a polynomial ``g`` given as text."""
        names = branch_names(n)
        g = parse(g_text, names)
        if n in g.used_variables():
            raise ValueError("g must not involve y")
        P = Polynomial.var(n, n + 1, names) - g
        center = (0.0,) * n if center is None else tuple(center)
        y0 = float(g.numeric()(np.array(list(center) + [0.0])))
        return cls(P, center, y0, radius)

    @classmethod
    def from_dict(cls, spec):
        n = int(spec["vars"])
        P = parse(spec["P"], branch_names(n))
        seed_x = spec.get("seed_x", [0.0] * n)
        return cls(P, tuple(seed_x), float(spec.get("seed_y", 0.0)), float(spec.get("radius", 1.0)))

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self):
        return {
            "P": render(self.P),
            "vars": self.n,
            "seed_x": list(self.seed_x),
            "seed_y": self.seed_y,
            "radius": self.radius,
        }

    # -- structure -------------------------------------------------------------
    @property
    def region(self):
        return Ball(self.seed_x, self.radius)

    @cached_property
    def explicit(self):
        """``g`` with ``f = g`` when ``P = c*y + h(x)``, else ``None``."""
        n = self.n
        if self.P.degree(n) != 1:
            return None
        coeffs = self.P.coefficients_in(n)
        c1 = coeffs[1]
        if not c1.is_constant():
            return None
        return (-coeffs[0]).scale(Fraction(1) / Fraction(c1.constant_value()))

    @property
    def is_polynomial(self):
        return self.explicit is not None

    @cached_property
    def _eval(self):
        n = self.n
        P = self.P
        Py = partial(P, n)
        Px = [partial(P, i) for i in range(n)]
        polys = [P, Py] + Px + [partial(Py, n)] + [partial(Py, i) for i in range(n)]
        polys += [partial(Px[i], j) for i in range(n) for j in range(i, n)]
        return NumericPolys(polys)

    @cached_property
    def _explicit_eval(self):
        g = self.explicit
        n = self.n
        gx = [partial(g, i) for i in range(n)]
        polys = [g] + gx + [partial(gx[i], j) for i in range(n) for j in range(i, n)]
        return NumericPolys(polys)

    def _unpack(self, vals):
        """Split a stacked evaluation into (P, Py, Px, Pyy, Pxy, Pxx)."""
        n = self.n
        P, Py = vals[..., 0], vals[..., 1]
        Px = vals[..., 2:2 + n]
        Pyy = vals[..., 2 + n]
        Pxy = vals[..., 3 + n:3 + 2 * n]
        tri = vals[..., 3 + 2 * n:]
        Pxx = np.empty(vals.shape[:-1] + (n, n))
        k = 0
        for i in range(n):
            for j in range(i, n):
                Pxx[..., i, j] = tri[..., k]
                Pxx[..., j, i] = tri[..., k]
                k += 1
        return P, Py, Px, Pyy, Pxy, Pxx

    def _pz(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.concatenate([x, y[..., None]], axis=-1)

    # -- Newton / continuation ----------------------------------------------------
    def _newton(self, x, y, iters=12):
        """Polish a root of ``P(x, .)``; returns (ok, y)."""
        prev = None
        for _ in range(iters):
            v = self._eval(self._pz(x, y))
            F, D = v[0], v[1]
            if abs(D) <= FOLD_RTOL * (1.0 + float(np.linalg.norm(v[2:2 + self.n]))):
                return False, y
            dy = F / D
            y = y - dy
            if not math.isfinite(y):
                return False, y
            if abs(dy) <= 1e-14 * (1.0 + abs(y)):
                return True, y
            if prev is not None and abs(dy) > 0.5 * prev and abs(dy) > 1e-12 * (1.0 + abs(y)):
                return False, y
            prev = abs(dy)
        v = self._eval(self._pz(x, y))
        return abs(v[0]) <= self.residual_tol, y

    def _polish_seed(self, y0):
        if self.explicit is not None:
            return float(self.explicit.numeric()(np.array(self.seed_x + (0.0,))))
        x0 = np.array(self.seed_x)
        ok, y = self._newton(x0, y0, iters=50)
        if not ok:
            y = self._nearest_root(x0, y0)
        v = self._eval(self._pz(x0, y))
        if abs(v[0]) > self.residual_tol:
            raise BranchError(f"seed residual {abs(v[0]):.3g} exceeds tolerance")
        if abs(v[1]) <= FOLD_RTOL * (1.0 + float(np.linalg.norm(v[2:2 + self.n]))):
            raise FoldError("dP/dy vanishes at the seed", parameter=0.0, point=self.seed_x)
        return float(y)

    def _nearest_root(self, x0, y0):
        # exact isolation of the real roots of P(x0, .) when Newton cannot settle
        n = self.n
        sub = self.P.substitute({i: Fraction(v) for i, v in enumerate(x0)})
        if sub.is_zero() or sub.degree(n) < 1:
            raise BranchError("P(x0, y) has no isolated roots")
        bound = 1 + max(abs(float(c)) for c in sub.terms.values()) / abs(float(sub.coefficients_in(n)[-1].constant_value()))
        roots = isolate_real_roots(sub, (-bound, bound), tol=1e-12, var=n)
        if not roots:
            raise BranchError("P(x0, y) has no real root")
        mids = [float(a + b) / 2 for a, b in roots]
        best = min(mids, key=lambda r: abs(r - y0))
        ok, y = self._newton(x0, best, iters=50)
        return y if ok else best

    def _fold(self, v):
        return abs(v[1]) <= FOLD_RTOL * (1.0 + float(np.linalg.norm(v[2:2 + self.n])))

    def continue_root(self, xa, ya, xb, steps=DEFAULT_STEPS):
        """Follow the root of ``P`` from ``(xa, ya)`` to ``xb`` along a segment."""
        xa = np.asarray(xa, dtype=float)
        xb = np.asarray(xb, dtype=float)
        dx = xb - xa
        if not np.any(dx):
            return float(ya)
        s, y = 0.0, float(ya)
        hmax = 1.0 / max(1, steps)
        h = hmax
        halvings = 0
        while s < 1.0:
            h = min(h, 1.0 - s)
            xs = xa + s * dx
            v = self._eval(self._pz(xs, y))
            if self._fold(v):
                raise FoldError(f"branch fold at path parameter {s:.6g}", parameter=s, point=tuple(xs))
            slope = -float(v[2:2 + self.n] @ dx) / v[1]
            s1 = 1.0 if 1.0 - (s + h) < 1e-15 else s + h
            ok, y1 = self._newton(xa + s1 * dx, y + (s1 - s) * slope)
            if ok:
                s, y = s1, y1
                halvings = 0
                h = min(2.0 * h, hmax)
            else:
                h *= 0.5
                halvings += 1
                if halvings > MAX_HALVINGS:
                    raise NewtonDivergence(f"Newton failed after {MAX_HALVINGS} halvings at path parameter {s:.6g}")
            if h < hmax * 2.0 ** -MAX_HALVINGS and s < 1.0:
                # steps collapse geometrically when approaching a fold
                if abs(v[1]) <= 1e-2 * (1.0 + float(np.linalg.norm(v[2:2 + self.n]))):
                    raise FoldError(f"branch fold near path parameter {s:.6g}", parameter=s, point=tuple(xs))
                raise NewtonDivergence(f"step size collapsed at path parameter {s:.6g}")
        return float(y)

    # -- vectorised continuation ---------------------------------------------------
    def _continue_many(self, X, steps=DEFAULT_STEPS):
        """Continue the seed root to every row of ``X``; failures come back as NaN."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        x0 = np.array(self.seed_x)
        dX = X - x0
        y = np.full(len(X), self.seed_y)
        bad = np.zeros(len(X), dtype=bool)
        for k in range(steps):
            s0, s1 = k / steps, (k + 1) / steps
            xs = x0 + s0 * dX
            v = self._eval(self._pz(xs, y))
            py = v[:, 1]
            pxn = np.linalg.norm(v[:, 2:2 + self.n], axis=1)
            fold = np.abs(py) <= FOLD_RTOL * (1.0 + pxn)
            bad |= fold
            with np.errstate(all="ignore"):
                slope = -np.einsum("ij,ij->i", v[:, 2:2 + self.n], dX) / py
                yk = y + (s1 - s0) * slope
                x1 = x0 + s1 * dX
                prev = np.full(len(X), np.inf)
                done = np.zeros(len(X), dtype=bool)
                for _ in range(12):
                    w = self._eval(self._pz(x1, yk))
                    dy = w[:, 0] / w[:, 1]
                    dy = np.where(done, 0.0, dy)
                    yk = yk - dy
                    step = np.abs(dy)
                    tiny = step <= 1e-14 * (1.0 + np.abs(yk))
                    diverge = (step > 0.5 * prev) & ~tiny & (prev < np.inf) & ~done
                    bad |= diverge | ~np.isfinite(yk)
                    done |= tiny
                    prev = np.where(done, prev, step)
                    if done.all():
                        break
                bad |= ~done
            y = np.where(bad, y, yk)
        y = np.where(bad, np.nan, y)
        return y, bad

    # -- public evaluation ---------------------------------------------------------
    def value(self, x, path_steps=DEFAULT_STEPS):
        x = np.asarray(x, dtype=float)
        if self.explicit is not None:
            return float(self._explicit_eval(x)[0])
        return self.continue_root(self.seed_x, self.seed_y, x, steps=path_steps)

    def values(self, X, errors="raise"):
        """Vectorised :meth:`value` for an array of points of shape ``(N, n)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.explicit is not None:
            return self._explicit_eval(X)[:, 0]
        y, bad = self._continue_many(X)
        for i in np.flatnonzero(bad):
            try:
                y[i] = self.continue_root(self.seed_x, self.seed_y, X[i])
            except BranchError:
                if errors == "raise":
                    raise
                y[i] = np.nan
        return y

    def values_near(self, X, Y0, iters=20):
        """Newton-polish previous branch values ``Y0`` at nearby points ``X``.

        Points where the polish fails fall back to continuation from the
        seed; the result is NaN only where that fails too.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.explicit is not None:
            return self._explicit_eval(X)[:, 0]
        y = np.array(Y0, dtype=float)
        ok = np.isfinite(y)
        with np.errstate(all="ignore"):
            for _ in range(iters):
                v = self._eval(self._pz(X, np.where(ok, y, 0.0)))
                dy = v[:, 0] / v[:, 1]
                y = y - np.where(ok, dy, 0.0)
                ok &= np.isfinite(y)
                if np.all(np.abs(dy[ok]) <= 1e-14 * (1 + np.abs(y[ok]))):
                    break
            v = self._eval(self._pz(X, np.where(ok, y, 0.0)))
            ok &= np.abs(v[:, 0]) <= self.residual_tol
            ok &= np.abs(y - Y0) <= 0.1 * (1 + np.abs(Y0))
        if not ok.all():
            y[~ok] = self.values(X[~ok], errors="nan")
        return y

    def jet_at(self, x, y=None, order=1):
        """Value, gradient and (for ``order=2``) Hessian at ``x``.

        ``y`` may carry an already tracked branch value for ``x``.
        """
        x = np.asarray(x, dtype=float)
        n = self.n
        if self.explicit is not None:
            v = self._explicit_eval(x)
            f = v[..., 0]
            g = v[..., 1:1 + n]
            if order < 2:
                return f, g, None
            H = np.empty(x.shape[:-1] + (n, n))
            k = 1 + n
            for i in range(n):
                for j in range(i, n):
                    H[..., i, j] = v[..., k]
                    H[..., j, i] = v[..., k]
                    k += 1
            return f, g, H
        if y is None:
            y = self.value(x) if x.ndim == 1 else self.values(x)
        P, Py, Px, Pyy, Pxy, Pxx = self._unpack(self._eval(self._pz(x, y)))
        scale = 1.0 + np.linalg.norm(Px, axis=-1)
        if np.any(np.abs(Py) <= FOLD_RTOL * scale):
            raise FoldError("dP/dy vanishes at the evaluation point", point=tuple(np.ravel(x)))
        g = -Px / Py[..., None]
        if order < 2:
            return np.asarray(y, dtype=float), g, None
        H = -(
            Pxx
            + Pxy[..., :, None] * g[..., None, :]
            + Pxy[..., None, :] * g[..., :, None]
            + Pyy[..., None, None] * g[..., :, None] * g[..., None, :]
        ) / Py[..., None, None]
        return np.asarray(y, dtype=float), g, H

    def gradient(self, x):
        f, g, _ = self.jet_at(np.asarray(x, dtype=float))
        g = np.asarray(g, dtype=float)
        return GradientValue(float(f), g, float(g @ g))

    def tracker(self):
        return BranchTracker(self)


class BranchTracker:
    """Sequential evaluator that continues from the last evaluated point.

    Optimisers and integrators query nearby points one after another, so
    short continuation paths from the previous point are far cheaper than
    restarting from the seed every time.  State is private to the instance.
    """

    def __init__(self, branch: NashBranch):
        self.branch = branch
        self.x = np.array(branch.seed_x)
        self.y = branch.seed_y

    def value(self, x):
        b = self.branch
        x = np.asarray(x, dtype=float)
        if b.explicit is not None:
            return float(b._explicit_eval(x)[0])
        if np.array_equal(x, self.x):
            return self.y
        dist = float(np.linalg.norm(x - self.x))
        steps = max(2, int(math.ceil(DEFAULT_STEPS * dist / b.radius)))
        try:
            y = b.continue_root(self.x, self.y, x, steps=steps)
        except BranchError:
            y = b.continue_root(b.seed_x, b.seed_y, x)
        self.x, self.y = x.copy(), y
        return y

    def jet(self, x, order=1):
        x = np.asarray(x, dtype=float)
        if self.branch.explicit is not None:
            f, g, H = self.branch.jet_at(x, order=order)
            return float(f), g, H
        y = self.value(x)
        f, g, H = self.branch.jet_at(x, y=y, order=order)
        return float(f), g, H


# -- module-level operations ------------------------------------------------------

def branch_eval(b: NashBranch, x, path_steps=DEFAULT_STEPS):
    """Branch value at ``x`` by continuation from the seed."""
    x = np.asarray(x, dtype=float)
    if np.linalg.norm(x - np.array(b.seed_x)) > b.radius * (1 + 1e-12):
        raise ValueError("point lies outside the branch domain")
    return b.value(x, path_steps=path_steps)


def branch_gradient(b: NashBranch, x) -> GradientValue:
    return b.gradient(x)


def degree_at(b: NashBranch) -> int:
    """Total degree of ``P``, the degree fed to every bound formula."""
    d = b.P.total_degree
    if d == NEG_INF:
        raise ValueError("zero polynomial")
    return int(d)


@dataclass
class CriticalScan:
    critical_values: list
    epsilon: float
    window: tuple
    points: list


def critical_value_scan(b: NashBranch, value_window=(-0.5, 0.5), grid=8, grad_tol=1e-6, seed=0):
    """Locate critical values of ``f`` in ``value_window`` over the ball.

    Minimises ``|grad f|^2`` from a grid of starts (plus a scrambled Sobol
    set); limits with ``|grad f| <= grad_tol`` give critical values.  The
    suggested ``epsilon`` is half the distance from 0 to the nearest
    nonzero critical value, or the window half-width if there is none.
    """
    lo, hi = value_window
    if not lo < 0 < hi:
        raise ValueError("value window must contain 0")
    half = min(-lo, hi)
    zero_tol = 1e-6 * half
    region = b.region
    starts = np.concatenate([region.grid(grid), region.low_discrepancy(grid ** b.n, seed=seed)])
    center = np.array(b.seed_x)
    bounds = [(c - b.radius, c + b.radius) for c in center]
    found = []
    for x0 in starts:
        tr = b.tracker()

        def obj(x):
            try:
                _, g, H = tr.jet(x, order=2)
            except BranchError:
                return 1e6, np.zeros_like(x)
            return float(g @ g), 2.0 * H @ g

        try:
            _, g0, _ = tr.jet(x0, order=1)
        except BranchError as err:
            raise BranchError(f"branch evaluation failed inside the domain: {err}") from err
        res = minimize(obj, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"gtol": 1e-14, "ftol": 1e-16, "maxiter": 300})
        x = res.x
        if not region.contains(x, slack=1e-9):
            continue
        try:
            f, g, _ = tr.jet(x)
        except BranchError:
            continue
        if float(np.linalg.norm(g)) <= grad_tol and lo < f < hi:
            found.append((float(f), tuple(float(v) for v in x)))
    found.sort()
    values, points = [], []
    for f, x in found:
        if values and abs(f - values[-1]) <= max(zero_tol, 1e-8 * abs(f)):
            continue
        values.append(f)
        points.append(x)
    nonzero = [abs(v) for v in values if abs(v) > zero_tol]
    eps = 0.5 * min(nonzero) if nonzero else half
    return CriticalScan(values, float(eps), (lo, hi), points)
