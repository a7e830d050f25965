"""Unit-speed gradient descent curves of ``|f|`` and their length bounds.

The field ``H = -sign(f) grad f / |grad f|`` moves at unit speed, so the
integration parameter is arc length.  With ``|grad f| >= C |f|^rho`` the
length of a curve that ends on ``f = 0`` is at most
``|f(start)|^(1 - rho) / ((1 - rho) C)``, and it can never be shorter than
the distance from the start to the zero set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .nashfn import BranchError, NashBranch
from .regions import as_region

# Runge-Kutta-Fehlberg 4(5) tableau (the field is autonomous, so no time nodes)
_A = [
    [],
    [1 / 4],
    [3 / 32, 9 / 32],
    [1932 / 2197, -7200 / 2197, 7296 / 2197],
    [439 / 216, -8.0, 3680 / 513, -845 / 4104],
    [-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40],
]
_B4 = np.array([25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0])
_B5 = np.array([16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])

REACHED = "reached_zero_level"
LEFT = "left_domain"
UNDERFLOW = "step_underflow"
MAX_LENGTH = "max_length"


class FlowError(RuntimeError):
    pass


class StartOnZeroSet(FlowError):
    pass


class StartAtCriticalPoint(FlowError):
    pass


@dataclass
class Trajectory:
    points: np.ndarray
    arc_length: float
    f_values: np.ndarray
    terminal: str
    start_f: float
    steps: int

    @property
    def start(self):
        return self.points[0]

    @property
    def end(self):
        return self.points[-1]

    def summary(self):
        return {
            "start": [float(v) for v in self.points[0]],
            "end": [float(v) for v in self.points[-1]],
            "arc_length": self.arc_length,
            "start_f": self.start_f,
            "end_f": float(self.f_values[-1]),
            "terminal": self.terminal,
            "steps": self.steps,
            "points": int(len(self.points)),
        }


def _polyline_length(pts):
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def flow(b: NashBranch, x0, region=None, stop_tol_f=1e-10, max_length=None, tol=1e-10,
         kappa=0.1, max_steps=200_000):
    """Integrate ``H`` from ``x0`` with adaptive RKF45 steps.

    Steps are capped at ``kappa * |f| / |grad f|`` so no step can jump across
    the zero level, and a step is accepted only if ``|f|`` decreases.
    """
    region = as_region(region or b.region)
    tr = b.tracker()
    x = np.array(x0, dtype=float)
    try:
        f, g, _ = tr.jet(x)
    except BranchError as err:
        raise FlowError(f"branch evaluation failed at the start: {err}") from err
    if abs(f) <= stop_tol_f:
        raise StartOnZeroSet("start on V: |f(x0)| is within the stop tolerance")
    gn = float(np.linalg.norm(g))
    if gn == 0.0:
        raise StartAtCriticalPoint("start at a critical point of f")
    sign = 1.0 if f > 0 else -1.0
    scale = getattr(region, "radius", None) or float(np.max(np.subtract(region.hi, region.lo)))
    if max_length is None:
        max_length = 10.0 * scale

    def field(p):
        _, gp, _ = tr.jet(p)
        nrm = float(np.linalg.norm(gp))
        if nrm == 0.0 or not math.isfinite(nrm):
            raise FlowError("gradient vanished during tracking")
        return -sign * gp / nrm

    pts, fs = [x.copy()], [f]
    s = 0.0
    h = min(kappa * abs(f) / gn, 0.01 * scale)
    terminal = None
    steps = 0
    while terminal is None:
        if steps >= max_steps:
            terminal = UNDERFLOW
            break
        cap = kappa * abs(f) / gn
        h = min(h, cap, max_length - s)
        if h <= 1e-14 * scale:
            terminal = UNDERFLOW if s < max_length else MAX_LENGTH
            break
        try:
            k = np.empty((6, len(x)))
            for i in range(6):
                xi = x + h * sum(a * k[j] for j, a in enumerate(_A[i])) if i else x
                k[i] = field(xi)
            x4 = x + h * (_B4 @ k)
            x5 = x + h * (_B5 @ k)
        except (BranchError, FlowError):
            h *= 0.25
            continue
        err = float(np.linalg.norm(x5 - x4))
        if err > tol * scale:
            h *= max(0.1, 0.9 * (tol * scale / err) ** 0.2)
            continue
        if not region.contains(x5):
            terminal = LEFT
            break
        try:
            fn, gnv, _ = tr.jet(x5)
        except BranchError:
            h *= 0.25
            continue
        if not abs(fn) < abs(f) or (fn != 0 and math.copysign(1.0, fn) != sign):
            h *= 0.25
            continue
        steps += 1
        s += float(np.linalg.norm(x5 - x))
        x, f = x5, fn
        gn = float(np.linalg.norm(gnv))
        pts.append(x.copy())
        fs.append(f)
        if abs(f) <= stop_tol_f:
            terminal = REACHED
        elif s >= max_length:
            terminal = MAX_LENGTH
        elif gn == 0.0:
            terminal = UNDERFLOW
        else:
            grow = 5.0 if err == 0 else min(5.0, 0.9 * (tol * scale / err) ** 0.2)
            h *= max(1.0, grow)
    P = np.array(pts)
    return Trajectory(P, _polyline_length(P), np.array(fs), terminal, float(fs[0]), steps)


def arc_length(traj: Trajectory):
    return _polyline_length(traj.points)


def length_upper_bound(start_f, rho, C):
    return abs(start_f) ** (1.0 - rho) / ((1.0 - rho) * C)


def in_U_region(b: NashBranch, x, region, rho, C):
    """Whether the length bound from ``x`` fits inside the region."""
    region = as_region(region)
    x = np.asarray(x, dtype=float)
    if not bool(region.contains(x)):
        return False
    dist = float(region.dist_to_complement(x))
    if dist <= 0.0:
        return False
    f = b.tracker().value(x)
    return length_upper_bound(f, rho, C) < dist


@dataclass
class LengthCheck:
    verdict: str
    lower_ok: bool | None
    upper_ok: bool | None
    lower_margin: float | None
    upper_margin: float | None
    dist_start: float | None
    length: float
    bound: float
    in_U: bool | None

    def as_dict(self):
        return dict(self.__dict__)


def check_length_bound(traj: Trajectory, rho, C, vsample=None, branch=None, region=None, rel_tol=1e-3):
    """Compare the curve length with the distance lower and the exponent upper bound.

    Margins are relative: ``(length + dist(end, V) - dist(start, V)) / dist(start, V)``
    for the lower side (the curve stops on a small level, not on ``V``) and
    ``(bound - length) / bound`` for the upper side.  Either side passes
    when its margin is at least ``-rel_tol``.
    """
    if not 0 <= rho < 1 or not C > 0:
        raise ValueError("need 0 <= rho < 1 and C > 0")
    bound = length_upper_bound(traj.start_f, rho, C)
    inU = None
    if branch is not None and region is not None:
        inU = in_U_region(branch, traj.start, region, rho, C)
    if traj.terminal != REACHED:
        return LengthCheck("inapplicable", None, None, None, None, None, traj.arc_length, bound, inU)
    upper_margin = (bound - traj.arc_length) / bound
    upper_ok = upper_margin >= -rel_tol
    lower_ok = lower_margin = d0 = None
    if isinstance(vsample, cKDTree) or (vsample is not None and len(vsample)):
        tree = vsample if isinstance(vsample, cKDTree) else cKDTree(np.asarray(vsample))
        d0, _ = tree.query(traj.start)
        de, _ = tree.query(traj.end)
        d0, de = float(d0), float(de)
        lower_margin = (traj.arc_length + de - d0) / max(d0, 1e-300)
        lower_ok = lower_margin >= -rel_tol
    ok = upper_ok and (lower_ok is not False)
    if inU is False:
        verdict = "informational"
    else:
        verdict = "pass" if ok else "fail"
    return LengthCheck(verdict, lower_ok, upper_ok, lower_margin, upper_margin, d0, traj.arc_length, bound, inU)


@dataclass
class KLCheck:
    min_value: float
    target: float
    passed: bool

    def as_dict(self):
        return dict(self.__dict__)


def check_kl(b: NashBranch, samples, rho, C, zero_tol=1e-12):
    """Minimum of ``(1 - rho) |f|^-rho |grad f|`` over samples off the zero set."""
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    if b.explicit is not None:
        f, g, _ = b.jet_at(X)
    else:
        y = b.values(X)
        f, g, _ = b.jet_at(X, y=y)
    f = np.asarray(f)
    if np.any(np.abs(f) <= zero_tol):
        raise ValueError("sample on V: |f| is within the zero tolerance")
    vals = (1.0 - rho) * np.abs(f) ** (-rho) * np.linalg.norm(g, axis=1)
    mn = float(vals.min())
    target = (1.0 - rho) * C
    return KLCheck(mn, target, bool(mn >= target * (1 - 0.01)))


@dataclass
class SandwichStats:
    runs: int
    passed: int
    failed: int
    informational: int
    inapplicable: int
    worst_upper_margin: float
    worst_lower_margin: float
    tightest_upper_margin: float

    def as_dict(self):
        return dict(self.__dict__)


def sandwich_experiment(b: NashBranch, rho, C, starts=100, seed=0, require_U=True, vsample=None,
                        stop_tol_f=1e-10, max_tries=100_000, rel_tol=1e-3):
    """Run the length check from random starts (optionally only starts in U)."""
    region = b.region
    rng = np.random.default_rng(seed)
    if vsample is None:
        from .empirical import zero_set_sample

        vsample = zero_set_sample(b, region, seed=seed)
    tree = cKDTree(vsample)
    checks = []
    tries = 0
    while len(checks) < starts and tries < max_tries:
        batch = region.uniform(64, rng)
        for x in batch:
            tries += 1
            if require_U and not in_U_region(b, x, region, rho, C):
                continue
            try:
                traj = flow(b, x, region, stop_tol_f=stop_tol_f)
            except (StartOnZeroSet, StartAtCriticalPoint):
                continue
            checks.append(check_length_bound(traj, rho, C, tree, b, region, rel_tol=rel_tol))
            if len(checks) >= starts:
                break
    verdicts = [c.verdict for c in checks]
    up = [c.upper_margin for c in checks if c.upper_margin is not None]
    lo = [c.lower_margin for c in checks if c.lower_margin is not None]
    return SandwichStats(
        runs=len(checks),
        passed=verdicts.count("pass"),
        failed=verdicts.count("fail"),
        informational=verdicts.count("informational"),
        inapplicable=verdicts.count("inapplicable"),
        worst_upper_margin=float(min(up)) if up else math.nan,
        worst_lower_margin=float(min(lo)) if lo else math.nan,
        tightest_upper_margin=float(min(abs(m) for m in up)) if up else math.nan,
    )
