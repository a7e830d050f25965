"""Compact regions with closed-form distance to the complement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    @property
    def dim(self):
        return len(self.center)

    def contains(self, x, slack=0.0):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - np.asarray(self.center), axis=-1) <= self.radius * (1 + slack)

    def dist_to_complement(self, x):
        x = np.asarray(x, dtype=float)
        d = self.radius - np.linalg.norm(x - np.asarray(self.center), axis=-1)
        return np.maximum(d, 0.0)

    def on_boundary(self, x, rtol=1e-6):
        x = np.asarray(x, dtype=float)
        return np.abs(np.linalg.norm(x - np.asarray(self.center), axis=-1) - self.radius) <= rtol * self.radius

    def uniform(self, count, rng):
        n = self.dim
        g = rng.standard_normal((count, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.random(count) ** (1.0 / n)
        return np.asarray(self.center) + g * r[:, None]

    def low_discrepancy(self, count, seed=0):
        """First ``count`` scrambled-Sobol points that fall inside the ball.

        The sequence for a given seed is fixed, so a longer request extends
        a shorter one.
        """
        n = self.dim
        sampler = qmc.Sobol(d=n, scramble=True, seed=seed)
        pts = []
        have = 0
        m = max(6, int(np.ceil(np.log2(2 * count))))
        while have < count:
            block = 2.0 * sampler.random_base2(m) - 1.0
            block = block[np.linalg.norm(block, axis=1) <= 1.0]
            pts.append(block)
            have += len(block)
        unit = np.concatenate(pts)[:count]
        return np.asarray(self.center) + self.radius * unit

    def grid(self, resolution):
        n = self.dim
        axes = [np.linspace(-1.0, 1.0, resolution)] * n
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        mesh = mesh[np.linalg.norm(mesh, axis=1) <= 1.0]
        return np.asarray(self.center) + self.radius * mesh


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    @property
    def dim(self):
        return len(self.lo)

    def contains(self, x, slack=0.0):
        x = np.asarray(x, dtype=float)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        pad = slack * (hi - lo)
        return np.all((x >= lo - pad) & (x <= hi + pad), axis=-1)

    def dist_to_complement(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        d = np.minimum(x - lo, hi - x).min(axis=-1)
        return np.maximum(d, 0.0)

    def uniform(self, count, rng):
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return lo + (hi - lo) * rng.random((count, self.dim))


def as_region(region):
    if isinstance(region, (Ball, Box)):
        return region
    raise TypeError(f"unsupported region shape: {type(region).__name__}")
