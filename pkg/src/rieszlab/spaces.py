"""Orlicz averages, BMO_theta(rho) seminorms, and the John-Nirenberg growth.

The phi-average of f over a region Q is

    ||f||_{phi,Q} = inf{ lam > 0 : (1/|Q|) sum_Q phi(|f|/lam) <= 1 },

computed by monotone bisection in log lam.  Mean oscillation divided by
(1 + r/rho(x))^theta, supped over a recorded ball sample, estimates the
BMO_theta(rho) seminorm from below.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InternalInconsistencyError, PreconditionError
from .grid import Ball, GridFunction, region_cells, region_is_clipped
from .sampling import BallSampleSpec

ORLICZ_REL_TOL = 1e-8
MAX_WIDENINGS = 200
MIN_OSCILLATION_CELLS = 8


@dataclass(frozen=True)
class YoungFunction:
    """Young function: convex, increasing, phi(0) = 0.

    Variants: power(s) with s > 1, exp-minus-one, and the t(1 + log+ t)
    functional that serves as the conjugate partner of exp-minus-one in
    the Holder check (it is not part of the public pairing surface).
    """

    tag: str
    s: float = 0.0

    @classmethod
    def power(cls, s: float) -> "YoungFunction":
        if not s > 1:
            raise PreconditionError(f"power variant needs s > 1, got {s}")
        return cls("power", float(s))

    @classmethod
    def exp_minus_one(cls) -> "YoungFunction":
        return cls("exp-minus-one")

    @classmethod
    def t_log_plus(cls) -> "YoungFunction":
        return cls("t-log-plus")

    def forward(self, t):
        t = np.asarray(t, dtype=float)
        if self.tag == "power":
            return t**self.s
        if self.tag == "exp-minus-one":
            with np.errstate(over="ignore"):
                return np.expm1(t)
        if self.tag == "t-log-plus":
            return t * (1.0 + np.log(np.maximum(t, 1.0)))
        raise PreconditionError(f"unknown Young variant {self.tag!r}")

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if self.tag == "power":
            return y ** (1.0 / self.s)
        if self.tag == "exp-minus-one":
            return np.log1p(y)
        if self.tag == "t-log-plus":
            return _t_log_plus_inverse(y)
        raise PreconditionError(f"unknown Young variant {self.tag!r}")

    def conjugate(self) -> "YoungFunction":
        if self.tag == "power":
            return YoungFunction.power(self.s / (self.s - 1.0))
        if self.tag == "exp-minus-one":
            return YoungFunction.t_log_plus()
        raise PreconditionError(f"no conjugate pairing for {self.tag!r}")

    def inverse_at_one(self) -> float:
        return float(self.inverse(1.0))


def _t_log_plus_inverse(y: np.ndarray) -> np.ndarray:
    """Invert t (1 + log+ t): identity below 1, bisection above."""
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out = y.copy()
    hi_mask = y > 1.0
    if np.any(hi_mask):
        yy = y[hi_mask]
        lo = np.ones_like(yy)
        hi = yy.copy()
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            f = mid * (1.0 + np.log(mid))
            lo = np.where(f < yy, mid, lo)
            hi = np.where(f >= yy, mid, hi)
            if np.all(hi - lo <= 1e-14 * np.maximum(hi, 1.0)):
                break
        out[hi_mask] = hi
    return float(out[0]) if scalar else out


def orlicz_average(f: GridFunction, Q, phi: YoungFunction) -> float:
    """phi-average of f over the region Q by bisection in log lambda.

    The map lam -> avg phi(|f|/lam) is strictly decreasing for f not
    identically zero on Q, so the crossing is unique.
    """
    cells = region_cells(f.domain, Q)
    if cells.size == 0:
        raise PreconditionError("empty region in orlicz_average")
    vals = np.abs(f.values[cells])
    if not np.any(vals > 0):
        return 0.0

    def G(lam: float) -> float:
        with np.errstate(over="ignore"):
            return float(np.mean(phi.forward(vals / lam)))

    hi = float(np.max(vals))
    widenings = 0
    while G(hi) > 1.0:
        hi *= 2.0
        widenings += 1
        if widenings > MAX_WIDENINGS:
            raise PreconditionError("no admissible lambda after 200 widenings")
    lo = hi
    while G(lo) <= 1.0:
        lo *= 0.5
        widenings += 1
        if widenings > MAX_WIDENINGS:
            # avg phi(|f|/lam) stays <= 1 down to lam ~ 0: treat as 0.
            return 0.0
    while hi / lo > 1.0 + ORLICZ_REL_TOL:
        mid = np.sqrt(lo * hi)
        if G(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return float(hi)


def holder_check(f: GridFunction, g: GridFunction, Q, phi: YoungFunction) -> float:
    """Ratio (avg_Q |fg|) / (2 ||f||_{phi,Q} ||g||_{conj,Q}); at most 1."""
    cells = region_cells(f.domain, Q)
    if cells.size == 0:
        raise PreconditionError("empty region in holder_check")
    prod = float(np.mean(np.abs(f.values[cells] * g.values[cells])))
    if prod == 0.0:
        return 0.0
    nf = orlicz_average(f, Q, phi)
    ng = orlicz_average(g, Q, phi.conjugate())
    if nf == 0.0 or ng == 0.0:
        raise InternalInconsistencyError(
            "zero phi-average with a nonzero product average"
        )
    return prod / (2.0 * nf * ng)


@dataclass(frozen=True)
class BmoReport:
    theta: float
    seminorm: float
    witness: Ball | None
    n_balls: int
    excluded_small: int
    sample: dict

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "seminorm": self.seminorm,
            "witness": None
            if self.witness is None
            else {"center": list(self.witness.center), "r": self.witness.r},
            "n_balls": self.n_balls,
            "excluded_small": self.excluded_small,
            "sample": self.sample,
        }


def bmo_theta_seminorm(
    b: GridFunction, rho: GridFunction, theta: float, spec: BallSampleSpec
) -> BmoReport:
    """Sup over sampled balls of (mean oscillation) / (1 + r/rho(x))^theta.

    A lower bound of the true seminorm.  Balls with fewer than 8 cells are
    excluded: oscillation is statistically meaningless at that scale.
    """
    if theta < 0:
        raise PreconditionError(f"theta must be >= 0, got {theta}")
    dom = b.domain
    best = 0.0
    witness = None
    excluded = 0
    used = 0
    for ball in spec.balls(dom):
        cells = region_cells(dom, ball)
        if cells.size < MIN_OSCILLATION_CELLS:
            excluded += 1
            continue
        used += 1
        vals = b.values[cells]
        osc = float(np.mean(np.abs(vals - np.mean(vals))))
        rho_x = float(rho.values[dom.cell_index(ball.center)])
        damped = osc / (1.0 + ball.r / rho_x) ** theta
        if damped > best:
            best, witness = damped, ball
    return BmoReport(
        theta=theta,
        seminorm=best,
        witness=witness,
        n_balls=used,
        excluded_small=excluded,
        sample=spec.describe(),
    )


def jn_ratio(
    b: GridFunction,
    ball: Ball,
    k: int,
    phi: YoungFunction,
    rho: GridFunction,
    theta_prime: float,
) -> float:
    """||b - b_{2^k B}||_{phi,B} / (k (1 + 2^k r/rho(x))^theta') for a trial
    theta'; the caller fits minimal feasible constants over samples."""
    if k < 1:
        raise PreconditionError(f"need k >= 1, got {k}")
    dom = b.domain
    big = Ball(ball.center, (2.0**k) * ball.r)
    if region_is_clipped(dom, big):
        raise PreconditionError(
            f"2^{k} B leaves the box (r = {big.r}, center {list(ball.center)})"
        )
    big_cells = region_cells(dom, big)
    if big_cells.size == 0:
        raise PreconditionError("degenerate dilated ball")
    b_big = float(np.mean(b.values[big_cells]))
    shifted = GridFunction(dom, b.values - b_big)
    num = orlicz_average(shifted, ball, phi)
    rho_x = float(rho.values[dom.cell_index(ball.center)])
    return num / (k * (1.0 + big.r / rho_x) ** theta_prime)
