"""Seeded, reproducible samples of balls, cells, and cell pairs.

Every estimator in this package works on a recorded sample; the spec of the
sample (counts, radius range, seed) travels with the report so any number
can be regenerated bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import PreconditionError
from .grid import Ball, Domain, region_cells

DEFAULT_CENTERS = 200
DEFAULT_RADII = 24


@dataclass(frozen=True)
class BallSampleSpec:
    """Centers (a stratified grid subsample) crossed with log-spaced radii.

    Radii default to the range [2h, M].  ``centers`` may pin explicit
    center coordinates, in which case ``n_centers`` is ignored.
    """

    n_centers: int = DEFAULT_CENTERS
    n_radii: int = DEFAULT_RADII
    r_min: float | None = None
    r_max: float | None = None
    seed: int = 0
    centers: tuple | None = None

    def radii(self, domain: Domain) -> np.ndarray:
        lo = 2.0 * domain.h if self.r_min is None else self.r_min
        hi = domain.M if self.r_max is None else self.r_max
        if not (0 < lo <= hi):
            raise PreconditionError(f"bad radius range [{lo}, {hi}]")
        return np.geomspace(lo, hi, self.n_radii)

    def center_cells(self, domain: Domain) -> np.ndarray:
        """Flat indices of the sampled centers."""
        if self.centers is not None:
            return np.array(
                [domain.cell_index(c) for c in self.centers], dtype=np.int64
            )
        return stratified_cells(domain, self.n_centers, np.random.default_rng(self.seed))

    def balls(self, domain: Domain) -> list[Ball]:
        cells = self.center_cells(domain)
        radii = self.radii(domain)
        out = []
        for i in cells:
            x = tuple(domain.cell_centers[i])
            for r in radii:
                out.append(Ball(x, float(r)))
        return out

    def describe(self) -> dict:
        return {
            "n_centers": self.n_centers,
            "n_radii": self.n_radii,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "seed": self.seed,
            "explicit_centers": None if self.centers is None else [list(c) for c in self.centers],
        }


def stratified_cells(domain: Domain, count: int, rng: np.random.Generator) -> np.ndarray:
    """Stratified subsample of cell indices: one cell per stratum, then
    uniform fill to reach ``count`` exactly."""
    if count < 1:
        raise PreconditionError(f"need at least one center, got {count}")
    k = max(1, int(np.floor(count ** (1.0 / domain.d))))
    while k**domain.d > count:
        k -= 1
    edges = np.linspace(0, domain.n, k + 1).astype(int)
    strata: list[np.ndarray] = []
    for flat in range(k**domain.d):
        idx = np.unravel_index(flat, (k,) * domain.d)
        cell = [rng.integers(edges[j], max(edges[j] + 1, edges[j + 1])) for j in idx]
        strata.append(np.ravel_multi_index(tuple(cell), (domain.n,) * domain.d))
    picked = np.array(strata, dtype=np.int64)
    extra = count - picked.size
    if extra > 0:
        fill = rng.integers(0, domain.num_cells, size=extra)
        picked = np.concatenate([picked, fill.astype(np.int64)])
    return picked


@dataclass(frozen=True)
class PairSampleSpec:
    """Random cell pairs (x, y), uniform over the grid."""

    count: int = 10_000
    seed: int = 0

    def pairs(self, domain: Domain) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(self.seed)
        i = rng.integers(0, domain.num_cells, size=self.count)
        j = rng.integers(0, domain.num_cells, size=self.count)
        return i.astype(np.int64), j.astype(np.int64)

    def pairs_from_pool(self, pool: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Pairs drawn uniformly from an explicit cell pool."""
        pool = np.asarray(pool, dtype=np.int64)
        if pool.size == 0:
            raise PreconditionError("empty cell pool")
        rng = np.random.default_rng(self.seed)
        i = pool[rng.integers(0, pool.size, size=self.count)]
        j = pool[rng.integers(0, pool.size, size=self.count)]
        return i, j

    def describe(self) -> dict:
        return {"count": self.count, "seed": self.seed}


def random_fields(domain: Domain, count: int, seed: int) -> np.ndarray:
    """Seeded standard-normal scalar fields, shape (count, n^d)."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((count, domain.num_cells))


def bump_fields(domain: Domain, count: int, seed: int, n_bumps: int = 4) -> np.ndarray:
    """Resolution-independent test functions: sums of Gaussian bumps.

    The bump parameters depend only on the seed, so the same function can
    be sampled on grids of different n and compared across resolutions.
    """
    rng = np.random.default_rng(seed)
    out = np.empty((count, domain.num_cells))
    X = domain.cell_centers
    for k in range(count):
        f = np.zeros(domain.num_cells)
        for _ in range(n_bumps):
            c = rng.uniform(-0.6 * domain.M, 0.6 * domain.M, domain.d)
            s = rng.uniform(0.1 * domain.M, 0.3 * domain.M)
            a = rng.uniform(-2.0, 2.0)
            f += a * np.exp(-np.sum((X - c) ** 2, axis=1) / (2 * s**2))
        out[k] = f
    return out


@dataclass(frozen=True)
class TripleSampleSpec:
    """Point triples (x, y, z) with |x-y| < gap_factor * |x-z| and
    |x-z| >= min_gap, all drawn from an allowed cell set."""

    count: int = 2000
    seed: int = 0
    gap_factor: float = 2.0 / 3.0

    def triples(self, domain: Domain, min_gap: float, allowed: np.ndarray | None = None):
        rng = np.random.default_rng(self.seed)
        pool = np.arange(domain.num_cells) if allowed is None else np.asarray(allowed)
        mask = np.zeros(domain.num_cells, dtype=bool)
        mask[pool] = True
        X = domain.cell_centers
        xs, ys, zs = [], [], []
        attempts = 0
        while len(xs) < self.count and attempts < 100 * self.count:
            attempts += 1
            x, z = rng.choice(pool, 2)
            dxz = float(np.linalg.norm(X[z] - X[x]))
            if dxz < min_gap:
                continue
            near = region_cells(domain, Ball(tuple(X[x]), self.gap_factor * dxz))
            near = near[mask[near] & (near != x)]
            if near.size == 0:
                continue
            y = int(rng.choice(near))
            if np.linalg.norm(X[y] - X[x]) >= self.gap_factor * dxz:
                continue
            xs.append(int(x))
            ys.append(y)
            zs.append(int(z))
        if not xs:
            raise PreconditionError("no admissible triples found")
        return (
            np.array(xs, dtype=np.int64),
            np.array(ys, dtype=np.int64),
            np.array(zs, dtype=np.int64),
        )

    def describe(self) -> dict:
        return {"count": self.count, "seed": self.seed, "gap_factor": self.gap_factor}
