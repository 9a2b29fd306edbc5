"""Potential classes, the critical radius field, and its covering geometry.

The critical radius of a nonnegative potential V is

    rho(x) = sup{ r > 0 : r^(2-d) * integral_{B(x,r)} V <= 1 },

computed here by a log-spaced scan of phi(r) = r^(2-d) * integral (64 points
per decade from h to 4M) followed by bisection in the bracketing interval.
The scan takes the last admissible grid point, not the first crossing, since
phi need not be monotone.

Empirical constants (reverse-Holder, doubling, the two-sided rho regularity
inequality, covering overlap) are fitted as minimal lattice constants with
zero violations on the recorded sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import PreconditionError
from .fields import BallSweep
from .fitting import ExponentConstantFit, fit_exponent_then_constant, fit_power_law
from .grid import (
    Ball,
    Domain,
    GridFunction,
    ball_average,
    ball_integral,
    region_cells,
    region_is_clipped,
    sample,
)
from .sampling import BallSampleSpec, PairSampleSpec

SCAN_POINTS_PER_DECADE = 64


@dataclass(frozen=True)
class Potential:
    """Pointwise rule V(x) >= 0 with its declared reverse-Holder exponent."""

    rule: Callable[[np.ndarray], np.ndarray]
    q: float
    d: int
    name: str = "custom"

    def __post_init__(self) -> None:
        if not self.q > self.d / 2.0:
            raise PreconditionError(
                f"declared reverse-Holder exponent q={self.q} must exceed d/2={self.d / 2}"
            )

    def field(self, domain: Domain) -> GridFunction:
        if domain.d != self.d:
            raise PreconditionError(
                f"potential is {self.d}-dimensional, domain is {domain.d}-dimensional"
            )
        f = sample(domain, self.rule)
        if np.any(f.values < 0):
            i = int(np.argwhere(f.values < 0)[0][0])
            raise PreconditionError(
                f"potential negative at {domain.cell_centers[i].tolist()}"
            )
        return f


@dataclass(frozen=True)
class RHReport:
    q: float
    constant: float
    witness: Ball
    skipped_zero_average: int
    n_balls: int
    sample: dict

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "constant": self.constant,
            "witness": {"center": list(self.witness.center), "r": self.witness.r},
            "skipped_zero_average": self.skipped_zero_average,
            "n_balls": self.n_balls,
            "sample": self.sample,
        }


def rh_constant(V: GridFunction, q: float, spec: BallSampleSpec) -> RHReport:
    """Sampled reverse-Holder constant sup (avg V^q)^(1/q) / (avg V).

    A lower bound for the true constant; balls with zero average are
    skipped and counted.
    """
    if not np.isfinite(q) or q <= 1:
        raise PreconditionError(f"need 1 < q < inf, got {q}")
    if V.is_vector:
        raise PreconditionError("potential must be a scalar field")
    dom = V.domain
    Vq = GridFunction(dom, V.values**q)
    best = -np.inf
    witness = None
    skipped = 0
    balls = spec.balls(dom)
    for b in balls:
        a1 = ball_average(V, b)
        if a1 == 0.0:
            skipped += 1
            continue
        ratio = ball_average(Vq, b) ** (1.0 / q) / a1
        if ratio > best:
            best, witness = ratio, b
    if witness is None:
        raise PreconditionError("potential averages to zero on every sampled ball")
    return RHReport(
        q=q,
        constant=float(best),
        witness=witness,
        skipped_zero_average=skipped,
        n_balls=len(balls),
        sample=spec.describe(),
    )


@dataclass(frozen=True)
class DoublingReport:
    mu: float
    C: float
    n_samples: int
    skipped_zero_mass: int
    excluded_clipped: int
    sample: dict

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "C": self.C,
            "n_samples": self.n_samples,
            "skipped_zero_mass": self.skipped_zero_mass,
            "excluded_clipped": self.excluded_clipped,
            "sample": self.sample,
        }


def doubling_exponent(
    V: GridFunction,
    spec: BallSampleSpec,
    dilations: Sequence[float] = (2.0, 4.0, 8.0),
) -> DoublingReport:
    """Fit integral_{tB} V <= C t^(d mu) integral_B V over sampled (B, t).

    Least squares on log ratios gives mu (clamped to >= 1), then C is
    inflated until the bound holds on every kept sample.  Pairs whose
    dilated ball leaves the box are excluded: clipping deflates the mass
    ratio and the doubling statement concerns the full space.
    """
    dom = V.domain
    ts, ratios = [], []
    skipped = 0
    excluded = 0
    for b in spec.balls(dom):
        base = ball_integral(V, b).value
        for t in dilations:
            tb = Ball(b.center, t * b.r)
            if region_is_clipped(dom, tb):
                excluded += 1
                continue
            if base == 0.0:
                skipped += 1
                continue
            ts.append(t)
            ratios.append(ball_integral(V, tb).value / base)
    if not ratios:
        raise PreconditionError("no usable (ball, dilation) samples")
    ts_a, ratios_a = np.asarray(ts), np.asarray(ratios)
    lt = np.log(ts_a)
    if np.ptp(lt) == 0:
        slope = float(dom.d)
    else:
        A = np.stack([lt, np.ones_like(lt)], axis=1)
        slope = float(
            np.linalg.lstsq(A, np.log(np.maximum(ratios_a, 1e-300)), rcond=None)[0][0]
        )
    mu = max(slope / dom.d, 1.0)
    C = float(np.max(ratios_a / ts_a ** (dom.d * mu)))
    return DoublingReport(
        mu=mu,
        C=C,
        n_samples=len(ratios),
        skipped_zero_mass=skipped,
        excluded_clipped=excluded,
        sample=spec.describe(),
    )


def scan_radii(domain: Domain) -> np.ndarray:
    """Log-spaced scan grid from h to 4M, 64 points per decade."""
    lo, hi = domain.h, 4.0 * domain.M
    count = int(np.ceil(SCAN_POINTS_PER_DECADE * np.log10(hi / lo))) + 1
    return np.geomspace(lo, hi, max(count, 2))


@dataclass(frozen=True)
class RhoResult:
    value: float
    below_grid: bool
    exceeds_box: bool


def _phi(V: GridFunction, x, r: float) -> float:
    d = V.domain.d
    return r ** (2 - d) * ball_integral(V, Ball(tuple(x), r)).value


def critical_radius(V: GridFunction, x, tol: float) -> RhoResult:
    """Critical radius at a single point by scan plus bisection.

    Returns the largest admissible radius found; flags mark a value pinned
    at the scan limits (below grid scale, or the sup lies beyond 4M).
    """
    if not tol > 0:
        raise PreconditionError(f"tol must be positive, got {tol}")
    radii = scan_radii(V.domain)
    phis = np.array([_phi(V, x, r) for r in radii])
    adm = phis <= 1.0
    if not adm.any():
        return RhoResult(float(radii[0]), True, False)
    if adm[-1]:
        return RhoResult(float(radii[-1]), False, True)
    i = int(np.max(np.nonzero(adm)[0]))
    lo, hi = float(radii[i]), float(radii[i + 1])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _phi(V, x, mid) <= 1.0:
            lo = mid
        else:
            hi = mid
    return RhoResult(lo, False, False)


@dataclass(frozen=True)
class CriticalRadiusField:
    field: GridFunction
    tol: float
    below_grid_count: int
    exceeds_box_count: int


def critical_radius_field(V: GridFunction, tol: float = 1e-3) -> CriticalRadiusField:
    """Critical radius at every cell center.

    Shares the scan grid of critical_radius; within the bracketing interval
    the crossing is located by log-log interpolation of phi instead of
    per-cell bisection, which convolution cannot batch.  The interpolation
    error is well below the scan spacing (phi is smooth in r).
    """
    dom = V.domain
    radii = scan_radii(dom)
    N = dom.num_cells
    lo_r = np.full(N, radii[0])
    hi_r = np.full(N, radii[-1])
    lo_phi = np.full(N, np.nan)
    hi_phi = np.full(N, np.nan)
    any_adm = np.zeros(N, dtype=bool)
    pending = np.zeros(N, dtype=bool)
    last_adm = np.zeros(N, dtype=bool)
    sweep = BallSweep(V.values, dom)
    for r in radii:
        phi = r ** (2 - dom.d) * sweep.at(float(r))[0]
        adm = phi <= 1.0
        if pending.any():
            sel = pending & ~adm
            hi_r[sel] = r
            hi_phi[sel] = phi[sel]
        sel = adm
        lo_r[sel] = r
        lo_phi[sel] = phi[sel]
        pending = adm.copy()
        any_adm |= adm
        last_adm = adm
    below = ~any_adm
    exceeds = last_adm
    mid = ~below & ~exceeds
    rho = np.empty(N)
    rho[below] = radii[0]
    rho[exceeds] = radii[-1]
    if mid.any():
        lp, hp = lo_phi[mid], hi_phi[mid]
        lr, hr = lo_r[mid], hi_r[mid]
        lam = np.where(
            lp > 1e-300,
            -np.log(np.maximum(lp, 1e-300)) / np.log(hp / np.maximum(lp, 1e-300)),
            0.5,
        )
        lam = np.clip(lam, 0.0, 1.0)
        rho[mid] = lr * (hr / lr) ** lam
    fld = GridFunction(dom, rho)
    return CriticalRadiusField(
        field=fld,
        tol=tol,
        below_grid_count=int(np.sum(below)),
        exceeds_box_count=int(np.sum(exceeds)),
    )


@dataclass(frozen=True)
class RhoRegularityReport:
    c0: float
    N0: float
    feasible: bool
    violations: int
    witness_pair: tuple | None
    n_pairs: int
    sample: dict

    def to_dict(self) -> dict:
        return {
            "c0": self.c0,
            "N0": self.N0,
            "feasible": self.feasible,
            "violations": self.violations,
            "witness_pair": self.witness_pair,
            "n_pairs": self.n_pairs,
            "sample": self.sample,
        }


def _regularity_required_c0(rho: GridFunction, i: np.ndarray, j: np.ndarray, N0: float) -> np.ndarray:
    dom = rho.domain
    rx = rho.values[i]
    ry = rho.values[j]
    D = np.linalg.norm(dom.cell_centers[i] - dom.cell_centers[j], axis=1)
    base = 1.0 + D / rx
    lower = (rx / ry) * base ** (-N0)
    upper = (ry / rx) * base ** (-N0 / (N0 + 1.0))
    return np.maximum(np.maximum(lower, upper), 1.0)


def fit_rho_regularity(
    rho: GridFunction,
    pair_spec: PairSampleSpec,
    exponent_lattice: np.ndarray | None = None,
) -> RhoRegularityReport:
    """Smallest lattice (c0, N0) with zero violations of the two-sided
    inequality linking rho at sampled pairs of points."""
    if pair_spec.count < 1000:
        raise PreconditionError(f"need >= 10^3 pairs, got {pair_spec.count}")
    if np.any(rho.values <= 0):
        raise PreconditionError("rho field must be strictly positive")
    lattice = (
        np.arange(1.0, 8.01, 0.25) if exponent_lattice is None else exponent_lattice
    )
    i, j = pair_spec.pairs(rho.domain)
    fit: ExponentConstantFit = fit_exponent_then_constant(
        lambda N0: _regularity_required_c0(rho, i, j, N0),
        lattice,
        constant_cap=1e2,
    )
    witness = None
    if not fit.feasible and fit.witness is not None:
        witness = (int(i[fit.witness]), int(j[fit.witness]))
    return RhoRegularityReport(
        c0=fit.C,
        N0=fit.exponent,
        feasible=fit.feasible,
        violations=0 if fit.feasible else 1,
        witness_pair=witness,
        n_pairs=pair_spec.count,
        sample=pair_spec.describe(),
    )


def rho_regularity_violations(
    rho: GridFunction, i: np.ndarray, j: np.ndarray, c0: float, N0: float
) -> int:
    """Count pairs violating either side of the inequality at (c0, N0)."""
    req = _regularity_required_c0(rho, i, j, N0)
    return int(np.sum(req > c0))


@dataclass(frozen=True)
class CriticalCovering:
    balls: list
    center_cells: np.ndarray
    max_overlap: dict
    C: float
    N1: float
    uncovered_count: int

    def to_dict(self) -> dict:
        return {
            "n_balls": len(self.balls),
            "balls": [{"center": list(b.center), "r": b.r} for b in self.balls],
            "max_overlap": {str(k): v for k, v in self.max_overlap.items()},
            "C": self.C,
            "N1": self.N1,
            "uncovered_count": self.uncovered_count,
        }


def build_critical_covering(
    rho: GridFunction, dilations: Sequence[float] = (1.0, 2.0, 4.0)
) -> CriticalCovering:
    """Greedy covering by balls B(x_j, rho(x_j)).

    Repeatedly takes the first uncovered cell in lexicographic order, so
    the construction is deterministic.  Overlap of the sigma-dilated balls
    is counted exhaustively and fitted to C * sigma^N1.
    """
    if np.any(rho.values <= 0):
        raise PreconditionError("rho field must be strictly positive")
    dom = rho.domain
    uncovered = np.ones(dom.num_cells, dtype=bool)
    balls: list[Ball] = []
    cells: list[int] = []
    while uncovered.any():
        i = int(np.argmax(uncovered))
        b = Ball(tuple(dom.cell_centers[i]), float(rho.values[i]))
        covered = region_cells(dom, b)
        # The seed cell is at distance 0, always inside its own ball.
        uncovered[covered] = False
        balls.append(b)
        cells.append(i)
    max_overlap: dict[float, int] = {}
    for s in dilations:
        counts = np.zeros(dom.num_cells, dtype=np.int64)
        for b in balls:
            counts[region_cells(dom, Ball(b.center, s * b.r))] += 1
        max_overlap[float(s)] = int(counts.max())
    fit = fit_power_law(
        np.array(list(max_overlap.keys())),
        np.array(list(max_overlap.values()), dtype=float),
        exponent_floor=0.0,
    )
    return CriticalCovering(
        balls=balls,
        center_cells=np.array(cells, dtype=np.int64),
        max_overlap=max_overlap,
        C=fit.C,
        N1=fit.exponent,
        uncovered_count=0,
    )


def casilema_ratio(
    V: Potential,
    domain: Domain,
    x,
    r: float,
    eps: float,
    C1: float = 1.0,
    V_field: GridFunction | None = None,
    rho_x: float | None = None,
) -> float:
    """Empirical constant of the near-singular potential integral bound:

        integral_{B(x, C1 r)} V(u) |u-x|^(eps-d) du
            <= C2 * r^(eps-2) * (r / rho(x))^(2 - d/q),

    valid for 0 < r <= rho(x) and eps > d/q.  The cell containing x is
    excluded from the quadrature (midpoint is undefined at the singularity);
    the exclusion under-estimates by O(h^eps).
    """
    if V_field is None:
        V_field = V.field(domain)
    if not eps > domain.d / V.q:
        raise PreconditionError(f"need eps > d/q = {domain.d / V.q}, got {eps}")
    if rho_x is None:
        rho_x = critical_radius(V_field, x, tol=1e-6 * domain.M).value
    if not 0 < r <= rho_x * (1 + 1e-9):
        raise PreconditionError(f"need 0 < r <= rho(x) = {rho_x}, got r = {r}")
    x = np.asarray(x, dtype=float)
    cells = region_cells(domain, Ball(tuple(x), C1 * r))
    centers = domain.cell_centers[cells]
    dist = np.linalg.norm(centers - x, axis=1)
    keep = cells != domain.cell_index(x)
    lhs = float(
        np.sum(V_field.values[cells][keep] * dist[keep] ** (eps - domain.d))
        * domain.h**domain.d
    )
    denom = r ** (eps - 2.0) * (r / rho_x) ** (2.0 - domain.d / V.q)
    return lhs / denom
