"""Empirical kernel bounds: adjoint-kernel decay and smoothness, the gap
to the classical kernel, Hormander-type block sums, and annulus L^s norms.

Every check fits the smallest constant that holds on a recorded sample.
The statements mirrored here are existence results, so the tests built on
these reports require stability across resolutions instead of comparing
against unknowable analytic constants.  Pairs closer than 2h and points
outside the inner half-box are excluded: the discrete kernel differs from
the continuum one at grid scale and near the Dirichlet walls.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma, pi

import numpy as np

from .errors import InternalInconsistencyError, PreconditionError
from .grid import Ball, Domain, GridFunction, region_cells
from .sampling import PairSampleSpec, TripleSampleSpec

BOUND_IDS = ("kes", "kesdif", "kesyclas", "hormander", "annulus")
NEAR_DIAGONAL_FACTOR = 2.0


@dataclass(frozen=True)
class KernelBoundReport:
    bound: str
    params: dict
    constant: float
    witness: tuple
    n_samples: int
    excluded: int
    sample: dict

    def __post_init__(self) -> None:
        if self.bound not in BOUND_IDS:
            raise PreconditionError(f"unknown bound id {self.bound!r}")
        if not np.isfinite(self.constant):
            raise InternalInconsistencyError(f"{self.bound} constant not finite")

    def to_dict(self) -> dict:
        return {
            "bound": self.bound,
            "params": self.params,
            "constant": self.constant,
            "witness": list(int(w) for w in self.witness),
            "n_samples": self.n_samples,
            "excluded": self.excluded,
            "sample": self.sample,
        }


def inner_half_box_cells(domain: Domain) -> np.ndarray:
    """Cells with every coordinate within M/2 of the center."""
    keep = np.all(np.abs(domain.cell_centers) <= 0.5 * domain.M + 1e-12, axis=1)
    return np.nonzero(keep)[0]


def unit_ball_volume(d: int) -> float:
    return pi ** (d / 2.0) / gamma(d / 2.0 + 1.0)


def ball_clip_fraction(domain: Domain, ball: Ball) -> float:
    """Fraction of the continuum ball volume lost to the box clip."""
    count = region_cells(domain, ball).size
    full = unit_ball_volume(domain.d) * ball.r**domain.d
    return max(0.0, 1.0 - count * domain.h**domain.d / full)


def _v_bracket(V: GridFunction, center_cell: int, radius: float) -> float:
    """Midpoint quadrature of integral_{B(c,radius)} V(u)/|u-c|^(d-1) du,
    excluding the singular cell."""
    dom = V.domain
    c = dom.cell_centers[center_cell]
    cells = region_cells(dom, Ball(tuple(c), radius))
    cells = cells[cells != center_cell]
    if cells.size == 0:
        return 0.0
    dist = np.linalg.norm(dom.cell_centers[cells] - c, axis=1)
    return float(np.sum(V.values[cells] / dist ** (dom.d - 1)) * dom.h**dom.d)


def _component_magnitude(K: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(K[:, rows, cols] ** 2, axis=0))


def decay_constant(
    K_adj: np.ndarray,
    V: GridFunction,
    rho: GridFunction,
    N_exp: float,
    pair_spec: PairSampleSpec,
    q: float,
    rho_at: str = "x",
) -> KernelBoundReport:
    """Smallest C with

        |K*(x,y)| <= C (1+|x-y|/rho)^(-N) |x-y|^(1-d) (V-bracket + 1/|x-y|)

    over sampled pairs; the V-bracket integrates over B(y, |x-y|/4) and is
    dropped when q >= d."""
    if rho_at not in ("x", "y"):
        raise PreconditionError(f"rho_at must be 'x' or 'y', got {rho_at}")
    dom = V.domain
    xs, ys = pair_spec.pairs_from_pool(inner_half_box_cells(dom))
    dist = np.linalg.norm(dom.cell_centers[xs] - dom.cell_centers[ys], axis=1)
    keep = dist >= NEAR_DIAGONAL_FACTOR * dom.h * (1 - 1e-12)
    excluded = int(np.sum(~keep))
    xs, ys, dist = xs[keep], ys[keep], dist[keep]
    if xs.size == 0:
        raise PreconditionError("no admissible pairs after exclusions")
    mags = _component_magnitude(K_adj, xs, ys)
    rho_ref = rho.values[xs] if rho_at == "x" else rho.values[ys]
    damp = (1.0 + dist / rho_ref) ** N_exp
    brackets = 1.0 / dist
    if q < dom.d:
        brackets = brackets + np.array(
            [_v_bracket(V, int(y), r / 4.0) for y, r in zip(ys, dist)]
        )
    ratios = mags * dist ** (dom.d - 1) * damp / brackets
    i = int(np.argmax(ratios))
    return KernelBoundReport(
        bound="kes",
        params={"N": N_exp, "q": q, "rho_at": rho_at},
        constant=float(ratios[i]),
        witness=(int(xs[i]), int(ys[i])),
        n_samples=int(xs.size),
        excluded=excluded,
        sample=pair_spec.describe(),
    )


def smoothness_constant(
    K_adj: np.ndarray,
    V: GridFunction,
    rho: GridFunction,
    N_exp: float,
    delta: float,
    triple_spec: TripleSampleSpec,
    q: float,
    rho_at: str = "x",
) -> KernelBoundReport:
    """Smallest C with

        |K*(x,z) - K*(y,z)| <= C |x-y|^delta (1+|x-z|/rho)^(-N)
                               |x-z|^(1-d-delta) (V-bracket + 1/|x-z|)

    over sampled triples with |x-y| < (2/3)|x-z| and |x-z| >= 4h."""
    dom = V.domain
    if not 0 < delta < min(1.0, 2.0 - dom.d / q):
        raise PreconditionError(
            f"need 0 < delta < min(1, 2-d/q) = {min(1.0, 2.0 - dom.d / q)}, got {delta}"
        )
    if rho_at not in ("x", "z"):
        raise PreconditionError(f"rho_at must be 'x' or 'z', got {rho_at}")
    xs, ys, zs = triple_spec.triples(dom, 4.0 * dom.h, allowed=inner_half_box_cells(dom))
    X = dom.cell_centers
    dxz = np.linalg.norm(X[xs] - X[zs], axis=1)
    dxy = np.linalg.norm(X[xs] - X[ys], axis=1)
    diff = np.sqrt(
        np.sum((K_adj[:, xs, zs] - K_adj[:, ys, zs]) ** 2, axis=0)
    )
    rho_ref = rho.values[xs] if rho_at == "x" else rho.values[zs]
    damp = (1.0 + dxz / rho_ref) ** N_exp
    brackets = 1.0 / dxz
    if q < dom.d:
        brackets = brackets + np.array(
            [_v_bracket(V, int(z), r / 4.0) for z, r in zip(zs, dxz)]
        )
    ratios = diff * dxz ** (dom.d - 1 + delta) * damp / (dxy**delta * brackets)
    i = int(np.argmax(ratios))
    return KernelBoundReport(
        bound="kesdif",
        params={"N": N_exp, "delta": delta, "q": q, "rho_at": rho_at},
        constant=float(ratios[i]),
        witness=(int(xs[i]), int(ys[i]), int(zs[i])),
        n_samples=int(xs.size),
        excluded=0,
        sample=triple_spec.describe(),
    )


def classical_gap(
    K_adj: np.ndarray,
    K_adj_classical: np.ndarray,
    V: GridFunction,
    rho: GridFunction,
    pair_spec: PairSampleSpec,
    q: float,
) -> KernelBoundReport:
    """Smallest C with

        |K*(x,z) - Kcl*(x,z)| <= C |x-z|^(1-d)
            (V-bracket + (1/|x-z|)(|x-z|/rho(x))^(2-d/q))

    over sampled pairs with 2h <= |x-z| <= rho(x); the classical kernel
    comes from the free operator on the same grid."""
    dom = V.domain
    xs, zs = pair_spec.pairs_from_pool(inner_half_box_cells(dom))
    dist = np.linalg.norm(dom.cell_centers[xs] - dom.cell_centers[zs], axis=1)
    keep = (dist >= NEAR_DIAGONAL_FACTOR * dom.h * (1 - 1e-12)) & (
        dist <= rho.values[xs] * (1 + 1e-12)
    )
    excluded = int(np.sum(~keep))
    xs, zs, dist = xs[keep], zs[keep], dist[keep]
    if xs.size == 0:
        raise PreconditionError("no admissible pairs after exclusions")
    gap = np.sqrt(
        np.sum((K_adj[:, xs, zs] - K_adj_classical[:, xs, zs]) ** 2, axis=0)
    )
    rho_x = rho.values[xs]
    brackets = (1.0 / dist) * (dist / rho_x) ** (2.0 - dom.d / q)
    if q < dom.d:
        brackets = brackets + np.array(
            [_v_bracket(V, int(z), r / 4.0) for z, r in zip(zs, dist)]
        )
    ratios = gap * dist ** (dom.d - 1) / brackets
    i = int(np.argmax(ratios))
    return KernelBoundReport(
        bound="kesyclas",
        params={"q": q},
        constant=float(ratios[i]),
        witness=(int(xs[i]), int(zs[i])),
        n_samples=int(xs.size),
        excluded=excluded,
        sample=pair_spec.describe(),
    )


@dataclass(frozen=True)
class HormanderSums:
    terms: np.ndarray
    partial_sums: np.ndarray
    truncated_at: int
    params: dict

    def to_dict(self) -> dict:
        return {
            "terms": [float(t) for t in self.terms],
            "partial_sums": [float(s) for s in self.partial_sums],
            "truncated_at": self.truncated_at,
            "params": self.params,
        }


def hormander_partial_sums(
    K: np.ndarray,
    rho: GridFunction,
    x0: int,
    y: int,
    r: float,
    theta: float,
    s: float,
    k_max: int = 16,
) -> HormanderSums:
    """Partial sums of

        sum_k k (2^k r)^(d/s') (1 + 2^k r/rho(x0))^theta
              ( integral_{|x-x0| ~ 2^k r} |K(x,y) - K(x,x0)|^s dx )^(1/s)

    over dyadic annuli 2^(k-1) r < |x-x0| <= 2^k r, truncated when the
    annulus leaves the box.  Requires |y-x0| < r and r >= 2h."""
    dom = rho.domain
    if not s > 1:
        raise PreconditionError(f"need s > 1, got {s}")
    if r < NEAR_DIAGONAL_FACTOR * dom.h * (1 - 1e-12):
        raise PreconditionError(f"need r >= 2h = {2 * dom.h}, got {r}")
    X = dom.cell_centers
    if np.linalg.norm(X[y] - X[x0]) >= r:
        raise PreconditionError("need |y - x0| < r")
    dist = np.linalg.norm(X - X[x0], axis=1)
    s_conj = s / (s - 1.0)
    rho_x0 = float(rho.values[x0])
    h_d = dom.h**dom.d
    terms = []
    truncated_at = k_max
    for k in range(1, k_max + 1):
        rin, rout = 2.0 ** (k - 1) * r, 2.0**k * r
        cells = np.nonzero((dist > rin) & (dist <= rout))[0]
        if cells.size == 0:
            truncated_at = k - 1
            break
        diff = np.sqrt(np.sum((K[:, cells, y] - K[:, cells, x0]) ** 2, axis=0))
        integ = float(np.sum(diff**s) * h_d) ** (1.0 / s)
        terms.append(k * rout ** (dom.d / s_conj) * (1.0 + rout / rho_x0) ** theta * integ)
    terms_a = np.asarray(terms)
    return HormanderSums(
        terms=terms_a,
        partial_sums=np.cumsum(terms_a),
        truncated_at=truncated_at,
        params={"x0": x0, "y": y, "r": r, "theta": theta, "s": s},
    )


def annulus_ls(
    K: np.ndarray,
    rho: GridFunction,
    ball: Ball,
    y: int,
    k: int,
    s: float,
    N_exp: float,
    mu: float,
    q: float,
) -> float:
    """Ratio of (integral_{B^k \\ B^(k-1)} |K(x,y)|^s dx)^(1/s) to
    (2^k r)^(-1-d/q') (rho(z)/2^k r)^(N - mu d), for B = B(z, r) with
    r >= rho(z), y in B, and B^k = 2^k B."""
    dom = rho.domain
    if k < 1:
        raise PreconditionError(f"need k >= 1, got {k}")
    if not s > 1:
        raise PreconditionError(f"need s > 1, got {s}")
    if mu < 1:
        raise PreconditionError(f"need mu >= 1, got {mu}")
    z_cell = dom.cell_index(ball.center)
    rho_z = float(rho.values[z_cell])
    if ball.r < rho_z * (1 - 1e-12):
        raise PreconditionError(f"need r >= rho(z) = {rho_z}, got {ball.r}")
    X = dom.cell_centers
    if np.linalg.norm(X[y] - np.asarray(ball.center)) > ball.r * (1 + 1e-12):
        raise PreconditionError("y must lie in the base ball")
    dist = np.linalg.norm(X - np.asarray(ball.center), axis=1)
    rin, rout = 2.0 ** (k - 1) * ball.r, 2.0**k * ball.r
    cells = np.nonzero((dist > rin) & (dist <= rout))[0]
    if cells.size == 0:
        return 0.0
    mags = _component_magnitude(K, cells, np.full(cells.size, y))
    integ = float(np.sum(mags**s) * dom.h**dom.d) ** (1.0 / s)
    q_conj = q / (q - 1.0)
    rhs = rout ** (-1.0 - dom.d / q_conj) * (rho_z / rout) ** (N_exp - mu * dom.d)
    return integ / rhs
