"""Uniform tensor grids on a centered box, and functions sampled on them.

The computational domain is the box [-M, M]^d split into n cells per axis
(n even), so every cell has side h = 2M/n and center

    x_i = -M + (i + 1/2) h,   i = 0, ..., n-1,

along each axis.  Cells are enumerated in row-major (C) order over the axis
index tuple.  All quadrature is the midpoint rule: a region integral is the
sum of cell-center values times h^d over the cells whose center lies in the
region.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np

from .errors import PreconditionError

GF_MAGIC = 0x47464231

_SCALAR = 0
_VECTOR = 1


@dataclass(frozen=True)
class Domain:
    """Uniform grid on [-M, M]^d with n cells per axis (n even)."""

    d: int
    M: float
    n: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise PreconditionError(f"dimension must be >= 1, got {self.d}")
        if self.n < 2 or self.n % 2 != 0:
            raise PreconditionError(f"n must be even and >= 2, got {self.n}")
        if not (self.M > 0 and np.isfinite(self.M)):
            raise PreconditionError(f"box half-width must be positive, got {self.M}")

    @property
    def h(self) -> float:
        return 2.0 * self.M / self.n

    @property
    def num_cells(self) -> int:
        return self.n**self.d

    @cached_property
    def axis_coords(self) -> np.ndarray:
        """Cell-center coordinates along one axis, shape (n,)."""
        out = -self.M + (np.arange(self.n) + 0.5) * self.h
        out.flags.writeable = False
        return out

    @cached_property
    def cell_centers(self) -> np.ndarray:
        """All cell centers, shape (n^d, d), row-major over axis indices."""
        grids = np.meshgrid(*([self.axis_coords] * self.d), indexing="ij")
        out = np.stack([g.ravel() for g in grids], axis=-1)
        out.flags.writeable = False
        return out

    def cell_index(self, point) -> int:
        """Flat index of the cell containing ``point`` (interior points only)."""
        point = np.asarray(point, dtype=float).reshape(self.d)
        idx = np.floor((point + self.M) / self.h).astype(int)
        if np.any(idx < 0) or np.any(idx >= self.n):
            raise PreconditionError(f"point {point.tolist()} lies outside the box")
        return int(np.ravel_multi_index(tuple(idx), (self.n,) * self.d))


@dataclass(frozen=True)
class Ball:
    """Closed Euclidean ball B(center, r)."""

    center: tuple
    r: float

    def __post_init__(self) -> None:
        if not (self.r > 0 and np.isfinite(self.r)):
            raise PreconditionError(f"ball radius must be positive, got {self.r}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


@dataclass(frozen=True)
class Cube:
    """Closed axis-parallel cube of center x and side 2r (half-side r)."""

    center: tuple
    r: float

    def __post_init__(self) -> None:
        if not (self.r > 0 and np.isfinite(self.r)):
            raise PreconditionError(f"cube half-side must be positive, got {self.r}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


Region = Union[Ball, Cube]


@dataclass(frozen=True)
class GridFunction:
    """Function sampled at cell centers.

    ``values`` has shape (n^d,) for scalar fields and (d, n^d) for vector
    fields; both are stored read-only.
    """

    domain: Domain
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        N = self.domain.num_cells
        if vals.shape == (N,):
            pass
        elif vals.shape == (self.domain.d, N):
            pass
        else:
            raise PreconditionError(
                f"values shape {vals.shape} matches neither ({N},) nor "
                f"({self.domain.d}, {N})"
            )
        if not np.all(np.isfinite(vals)):
            bad = np.argwhere(~np.isfinite(vals))[0]
            raise PreconditionError(f"non-finite value at flat position {bad.tolist()}")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == 2

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean magnitude, shape (n^d,)."""
        if self.is_vector:
            return np.sqrt(np.sum(self.values**2, axis=0))
        return np.abs(self.values)


def sample(domain: Domain, rule: Callable[[np.ndarray], np.ndarray]) -> GridFunction:
    """Evaluate a pointwise rule at every cell center.

    ``rule`` receives the (n^d, d) array of centers and must return shape
    (n^d,) for a scalar field or (n^d, d) for a vector field.  Non-finite
    outputs are rejected with the offending point in the message.
    """
    centers = domain.cell_centers
    vals = np.asarray(rule(centers), dtype=float)
    N = domain.num_cells
    if vals.shape == (N, domain.d):
        vals = vals.T
    elif vals.shape != (N,):
        raise PreconditionError(
            f"rule returned shape {vals.shape}; expected ({N},) or ({N}, {domain.d})"
        )
    flat_bad = ~np.isfinite(vals if vals.ndim == 1 else vals.T)
    if np.any(flat_bad):
        i = int(np.argwhere(flat_bad.reshape(N, -1).any(axis=1))[0][0])
        raise PreconditionError(
            f"rule produced a non-finite value at center {centers[i].tolist()}"
        )
    return GridFunction(domain, vals)


def region_is_clipped(domain: Domain, region: Region) -> bool:
    """True when the region extends beyond the box [-M, M]^d."""
    c = np.asarray(region.center)
    return bool(np.any(c - region.r < -domain.M) or np.any(c + region.r > domain.M))


def region_cells(domain: Domain, region: Region) -> np.ndarray:
    """Flat indices of the cells whose center lies in the region."""
    if len(region.center) != domain.d:
        raise PreconditionError(
            f"region center has {len(region.center)} coordinates on a "
            f"{domain.d}-dimensional domain"
        )
    c = np.asarray(region.center, dtype=float)
    ax = domain.axis_coords
    # Per-axis index windows for the bounding box of the region.
    lo = np.searchsorted(ax, c - region.r, side="left")
    hi = np.searchsorted(ax, c + region.r, side="right")
    if np.any(lo >= hi):
        return np.empty(0, dtype=np.int64)
    windows = [np.arange(lo[j], hi[j], dtype=np.int64) for j in range(domain.d)]
    if isinstance(region, Cube):
        # Axis windows characterize cube membership exactly.
        flat = windows[0]
        for j in range(1, domain.d):
            flat = (flat[:, None] * domain.n + windows[j][None, :]).ravel()
        return flat
    # Ball: intersect the bounding box with the Euclidean distance test.
    sq = np.zeros((1,) * domain.d)
    for j in range(domain.d):
        shape = [1] * domain.d
        shape[j] = len(windows[j])
        sq = sq + ((ax[windows[j]] - c[j]) ** 2).reshape(shape)
    mask = sq <= region.r**2 * (1 + 1e-12)
    idx = np.argwhere(mask)
    if idx.size == 0:
        return np.empty(0, dtype=np.int64)
    offs = np.array([w[0] for w in windows], dtype=np.int64)
    full = idx + offs[None, :]
    flat = full[:, 0]
    for j in range(1, domain.d):
        flat = flat * domain.n + full[:, j]
    return flat


@dataclass(frozen=True)
class RegionQuad:
    """Midpoint quadrature of a scalar field over a region."""

    value: float
    cell_count: int
    clipped: bool
    empty: bool


def ball_integral(f: GridFunction, region: Region) -> RegionQuad:
    """Midpoint-rule integral of a scalar field over a ball or cube.

    Returns the value together with flags: ``clipped`` when the region
    extends beyond the box, ``empty`` when no cell center falls inside
    (the value is then 0).
    """
    if f.is_vector:
        raise PreconditionError("region integrals are defined for scalar fields")
    dom = f.domain
    cells = region_cells(dom, region)
    clipped = region_is_clipped(dom, region)
    if cells.size == 0:
        return RegionQuad(0.0, 0, clipped, True)
    val = float(np.sum(f.values[cells]) * dom.h**dom.d)
    return RegionQuad(val, int(cells.size), clipped, False)


def ball_average(f: GridFunction, region: Region) -> float:
    """Region average with the discrete measure |B| = (cell count) h^d."""
    quad = ball_integral(f, region)
    if quad.empty:
        raise PreconditionError(
            f"degenerate region: no cell center inside r={region.r} at "
            f"{list(region.center)}"
        )
    return quad.value / (quad.cell_count * f.domain.h**f.domain.d)


def weighted_lp_norm(f: GridFunction, p: float, weight: GridFunction | None = None) -> float:
    """Discrete L^p(w) norm; vector fields use the pointwise magnitude.

    For finite p this is (sum |f|^p w h^d)^(1/p); p = inf gives the max of
    |f| (the weight does not enter).  The weight must be scalar and positive.
    """
    if not (p >= 1):
        raise PreconditionError(f"p must satisfy p >= 1, got {p}")
    mag = f.magnitude()
    if weight is not None:
        if weight.is_vector:
            raise PreconditionError("weight must be a scalar field")
        if weight.domain != f.domain:
            raise PreconditionError("weight lives on a different domain")
        if np.any(weight.values <= 0):
            raise PreconditionError("weight must be strictly positive")
    if np.isinf(p):
        return float(np.max(mag))
    w = weight.values if weight is not None else 1.0
    return float(np.sum(mag**p * w) ** (1.0 / p) * f.domain.h ** (f.domain.d / p))


def save_gridfunction(f: GridFunction, path: str) -> None:
    """Write a field as 5 little-endian int64 header words plus float64 data.

    Header: (magic, d, n, kind, 0) with kind 0 for scalar and 1 for vector.
    Data is row-major; vector fields store d component blocks of n^d values.
    """
    kind = _VECTOR if f.is_vector else _SCALAR
    header = struct.pack("<5q", GF_MAGIC, f.domain.d, f.domain.n, kind, 0)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def load_gridfunction(path: str, domain: Domain) -> GridFunction:
    """Read a field written by :func:`save_gridfunction` onto ``domain``."""
    with open(path, "rb") as fh:
        header = fh.read(40)
        if len(header) < 40:
            raise PreconditionError(f"{path}: truncated header")
        magic, d, n, kind, _ = struct.unpack("<5q", header)
        if magic != GF_MAGIC:
            raise PreconditionError(f"{path}: bad magic {magic:#x}")
        if (d, n) != (domain.d, domain.n):
            raise PreconditionError(
                f"{path}: stored grid (d={d}, n={n}) does not match "
                f"domain (d={domain.d}, n={domain.n})"
            )
        count = domain.num_cells * (d if kind == _VECTOR else 1)
        data = np.frombuffer(fh.read(count * 8), dtype="<f8")
    if data.size != count:
        raise PreconditionError(f"{path}: expected {count} values, got {data.size}")
    if kind == _VECTOR:
        data = data.reshape(d, domain.num_cells)
    return GridFunction(domain, data.astype(float))


def gridfunction_to_json(f: GridFunction) -> str:
    """Small-field JSON export with the grid parameters inline."""
    doc = {
        "d": f.domain.d,
        "M": f.domain.M,
        "n": f.domain.n,
        "kind": "vector" if f.is_vector else "scalar",
        "values": f.values.tolist(),
    }
    return json.dumps(doc, sort_keys=True)
