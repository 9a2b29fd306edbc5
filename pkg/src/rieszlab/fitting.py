"""Empirical constant fitting: minimal feasible constants on search lattices.

The inequalities under study only assert that constants exist.  We report
the smallest constants on a discrete lattice that give zero violations on
the fitted sample; rounding the constant up to the lattice leaves a small
safety margin that makes the fits robust on held-out samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError

LOG10_STEP = 0.05


def round_up_log(value: float, step: float = LOG10_STEP) -> float:
    """Smallest lattice point 10^(k*step) >= value (value <= 0 -> 0)."""
    if value <= 0:
        return 0.0
    k = np.ceil(np.log10(value) / step - 1e-12)
    return float(10.0 ** (k * step))


def min_feasible_constant(required: np.ndarray, step: float = LOG10_STEP) -> float:
    """Lattice constant C with C >= required everywhere."""
    req = np.asarray(required, dtype=float)
    if req.size == 0:
        raise PreconditionError("no samples to fit a constant on")
    if not np.all(np.isfinite(req)):
        raise PreconditionError("non-finite requirement in constant fit")
    return round_up_log(float(np.max(req)), step)


@dataclass(frozen=True)
class PowerLawFit:
    """Fit of ratio <= C * t^exponent with zero violations on the sample."""

    C: float
    exponent: float
    n_samples: int

    def bound(self, t) -> np.ndarray:
        return self.C * np.asarray(t, dtype=float) ** self.exponent


def fit_power_law(
    t: np.ndarray,
    ratios: np.ndarray,
    exponent_floor: float | None = None,
) -> PowerLawFit:
    """Least-squares fit of log ratio vs log t, then C inflated until the
    bound holds on every sample."""
    t = np.asarray(t, dtype=float)
    ratios = np.asarray(ratios, dtype=float)
    keep = ratios > 0
    if not np.any(keep):
        raise PreconditionError("no positive ratios to fit")
    lt, lr = np.log(t[keep]), np.log(ratios[keep])
    if np.ptp(lt) == 0:
        slope = exponent_floor if exponent_floor is not None else 0.0
    else:
        slope = float(np.polyfit(lt, lr, 1)[0])
    if exponent_floor is not None:
        slope = max(slope, exponent_floor)
    C = float(np.max(ratios[keep] / t[keep] ** slope))
    return PowerLawFit(C=C, exponent=slope, n_samples=int(np.sum(keep)))


@dataclass(frozen=True)
class ExponentConstantFit:
    """Minimal (C, exponent) on a lattice with zero violations.

    ``feasible`` is False when even the largest lattice pair violates;
    ``witness`` then indexes a violating sample.
    """

    C: float
    exponent: float
    feasible: bool
    witness: int | None
    n_samples: int


def fit_exponent_then_constant(
    required_constant,
    exponent_lattice: np.ndarray,
    constant_cap: float = 1e4,
    step: float = LOG10_STEP,
    order: str = "constant-first",
) -> ExponentConstantFit:
    """Minimal feasible (C, exponent) over the lattice.

    ``required_constant(e)`` returns the per-sample array of constants that
    the inequality demands at exponent e; a pair is feasible when that
    maximum stays at or below ``constant_cap``, and its fitted constant is
    the lattice ceiling of the maximum.  ``order`` picks which coordinate
    is minimized first: "constant-first" returns the smallest constant
    (ties to the smaller exponent), "exponent-first" the smallest feasible
    exponent with its own minimal constant.
    """
    if order not in ("constant-first", "exponent-first"):
        raise PreconditionError(f"unknown fit order {order!r}")
    best: tuple[float, float] | None = None
    worst_idx = None
    n = 0
    for e in np.sort(np.asarray(exponent_lattice, dtype=float)):
        req = np.asarray(required_constant(float(e)), dtype=float)
        n = req.size
        if n == 0:
            raise PreconditionError("no samples to fit on")
        m = float(np.max(req))
        if not np.isfinite(m) or m > constant_cap:
            if worst_idx is None:
                worst_idx = int(np.argmax(req))
            continue
        C = round_up_log(max(m, 1.0), step)
        if order == "exponent-first":
            best = (C, float(e))
            break
        if best is None or (C, e) < best:
            best = (C, float(e))
    if best is None:
        return ExponentConstantFit(
            C=float("nan"), exponent=float("nan"), feasible=False,
            witness=worst_idx, n_samples=n,
        )
    return ExponentConstantFit(
        C=best[0], exponent=best[1], feasible=True, witness=None, n_samples=n
    )
