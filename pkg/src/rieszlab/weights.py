"""A_p^{rho,theta} constants, the damped maximal operator M^theta, and the
constructive A_1-type weight generator u = (M^theta g)^delta.

The A_p ratio of a ball B = B(x,r) is

    (avg_B w)^(1/p) * (avg_B w^(-1/(p-1)))^(1/p'),      p > 1,
    (avg_B w) / (inf_B w),                              p = 1,

and the reported constant is the sup over sampled regions of the ratio
divided by (1 + r/rho(x))^theta.  Exponent/constant fits in this module
minimize the exponent first, then the constant, on a lattice.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import PreconditionError
from .fields import BallSweep
from .fitting import ExponentConstantFit, fit_exponent_then_constant
from .grid import Ball, Cube, GridFunction, region_cells
from .sampling import BallSampleSpec
from .schrodinger_geometry import scan_radii

AP_MODES = ("all-balls", "sub-critical-only", "cubes")


@dataclass(frozen=True)
class Weight:
    """Strictly positive scalar field with a provenance tag."""

    field: GridFunction
    provenance: str = "sampled-rule"

    def __post_init__(self) -> None:
        if self.field.is_vector:
            raise PreconditionError("weights must be scalar fields")
        if np.any(self.field.values <= 0):
            raise PreconditionError("weights must be strictly positive")


def _wfield(w: Union[Weight, GridFunction]) -> GridFunction:
    f = w.field if isinstance(w, Weight) else w
    if f.is_vector:
        raise PreconditionError("weights must be scalar fields")
    if np.any(f.values <= 0):
        raise PreconditionError("weights must be strictly positive")
    return f


@dataclass(frozen=True)
class ApReport:
    p: float
    theta: float
    constant: float
    witness: dict | None
    mode: str
    sample: dict

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "theta": self.theta,
            "constant": self.constant,
            "witness": self.witness,
            "mode": self.mode,
            "sample": self.sample,
        }


def ap_constant(
    w: Union[Weight, GridFunction],
    p: float,
    theta: float,
    mode: str = "all-balls",
    spec: BallSampleSpec | None = None,
    rho: GridFunction | None = None,
) -> ApReport:
    """Sampled A_p^{rho,theta} constant of a weight.

    Modes: "all-balls" sweeps the sample as is; "sub-critical-only" keeps
    balls with r <= rho(x) (the local class); "cubes" uses cubes of
    half-side r at the same centers.  Near-zero weights can overflow
    w^(-1/(p-1)); such regions enter the sup as +inf.
    """
    if p < 1:
        raise PreconditionError(f"need p >= 1, got {p}")
    if theta < 0:
        raise PreconditionError(f"need theta >= 0, got {theta}")
    if mode not in AP_MODES:
        raise PreconditionError(f"unknown region mode {mode!r}")
    wf = _wfield(w)
    dom = wf.domain
    if rho is None and (theta > 0 or mode == "sub-critical-only"):
        raise PreconditionError(f"mode {mode!r} with theta={theta} needs a rho field")
    spec = spec if spec is not None else BallSampleSpec()
    best = -np.inf
    witness = None
    used = 0
    for ball in spec.balls(dom):
        if mode == "sub-critical-only":
            rho_x = float(rho.values[dom.cell_index(ball.center)])
            if ball.r > rho_x:
                continue
        region = Cube(ball.center, ball.r) if mode == "cubes" else ball
        cells = region_cells(dom, region)
        if cells.size == 0:
            continue
        used += 1
        vals = wf.values[cells]
        if p == 1.0:
            ratio = float(np.mean(vals) / np.min(vals))
        else:
            with np.errstate(over="ignore", divide="ignore"):
                dual = float(np.mean(vals ** (-1.0 / (p - 1.0))))
            ratio = float(np.mean(vals)) ** (1.0 / p) * dual ** ((p - 1.0) / p)
        if theta > 0:
            rho_x = float(rho.values[dom.cell_index(ball.center)])
            ratio /= (1.0 + ball.r / rho_x) ** theta
        if ratio > best:
            best = ratio
            witness = {"center": list(region.center), "r": region.r}
    if witness is None:
        raise PreconditionError("no usable regions in the sample")
    return ApReport(
        p=p, theta=theta, constant=float(best), witness=witness,
        mode=mode, sample=spec.describe(),
    )


def m_theta(f: GridFunction, rho: GridFunction, theta: float) -> GridFunction:
    """Damped maximal function: at each cell x,

        max over the radius grid of (1 + r/rho(x))^(-theta) avg_{B(x,r)} |f|

    together with |f(x)| itself as the r -> 0 term.  The radius grid is the
    shared log grid [h, 4M], swept once for all cells by convolution.
    """
    if theta < 0:
        raise PreconditionError(f"need theta >= 0, got {theta}")
    dom = f.domain
    if f.is_vector:
        raise PreconditionError("maximal function of a scalar field only")
    absf = np.abs(f.values)
    best = absf.copy()
    sweep = BallSweep(absf, dom)
    rho_v = rho.values
    h_d = dom.h**dom.d
    for r in scan_radii(dom):
        mass, count = sweep.at(float(r))
        avg = mass / (count * h_d)
        damped = avg / (1.0 + r / rho_v) ** theta
        np.maximum(best, damped, out=best)
    return GridFunction(dom, best)


def infmde_ratios(
    u: GridFunction, rho: GridFunction, spec: BallSampleSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Per-ball ((avg_B u)/(inf_B u), 1 + R/rho(x)) over the sample."""
    dom = u.domain
    ratios, bases = [], []
    for ball in spec.balls(dom):
        cells = region_cells(dom, ball)
        if cells.size == 0:
            continue
        vals = u.values[cells]
        ratios.append(float(np.mean(vals) / np.min(vals)))
        rho_x = float(rho.values[dom.cell_index(ball.center)])
        bases.append(1.0 + ball.r / rho_x)
    return np.asarray(ratios), np.asarray(bases)


@dataclass(frozen=True)
class A1Construction:
    weight: GridFunction
    theta: float
    delta: float
    beta: float
    C: float
    feasible: bool
    violations: int
    n_balls: int
    sample: dict

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "delta": self.delta,
            "beta": self.beta,
            "C": self.C,
            "feasible": self.feasible,
            "violations": self.violations,
            "n_balls": self.n_balls,
            "sample": self.sample,
        }


def build_a1_weight(
    g: GridFunction,
    rho: GridFunction,
    theta: float,
    delta: float,
    spec: BallSampleSpec | None = None,
    beta_lattice: np.ndarray | None = None,
    constant_cap: float = 1e3,
) -> A1Construction:
    """u = (M^theta g)^delta, with the smallest lattice exponent beta such
    that avg_B u <= C (1 + R/rho(x))^beta inf_B u holds on every sampled
    ball for a capped constant."""
    if not 0 < delta < 1:
        raise PreconditionError(f"need 0 < delta < 1, got {delta}")
    if not np.any(g.values != 0):
        raise PreconditionError("degenerate source: g is identically zero")
    u = GridFunction(g.domain, m_theta(g, rho, theta).values ** delta)
    spec = spec if spec is not None else BallSampleSpec()
    ratios, bases = infmde_ratios(u, rho, spec)
    lattice = np.arange(0.0, 8.01, 0.25) if beta_lattice is None else beta_lattice
    fit: ExponentConstantFit = fit_exponent_then_constant(
        lambda b: ratios / bases**b,
        lattice,
        constant_cap=constant_cap,
        order="exponent-first",
    )
    return A1Construction(
        weight=u,
        theta=theta,
        delta=delta,
        beta=fit.exponent,
        C=fit.C,
        feasible=fit.feasible,
        violations=0 if fit.feasible else 1,
        n_balls=ratios.size,
        sample=spec.describe(),
    )


def fit_pointwise_domination(
    u: Union[Weight, GridFunction],
    rho: GridFunction,
    theta_lattice: np.ndarray | None = None,
    constant_cap: float = 1e3,
) -> ExponentConstantFit:
    """Smallest lattice theta' with M^{theta'} u <= C u pointwise (capped C):
    the testable form of the A_1^{rho,inf} membership criterion."""
    uf = _wfield(u)
    lattice = np.arange(0.0, 8.01, 0.25) if theta_lattice is None else theta_lattice

    def required(t: float) -> np.ndarray:
        return m_theta(uf, rho, t).values / uf.values

    return fit_exponent_then_constant(
        required, lattice, constant_cap=constant_cap, order="exponent-first"
    )


@dataclass(frozen=True)
class ScanRow:
    parameter: float
    constant: float


@dataclass(frozen=True)
class OpennessScan:
    rows: list
    threshold: float
    largest_admissible: float | None

    def to_dict(self) -> dict:
        return {
            "rows": [{"parameter": r.parameter, "constant": r.constant} for r in self.rows],
            "threshold": self.threshold,
            "largest_admissible": self.largest_admissible,
        }


def openness_scan(
    w: Union[Weight, GridFunction],
    p: float,
    theta: float,
    eps_grid: np.ndarray,
    threshold: float,
    mode: str = "all-balls",
    spec: BallSampleSpec | None = None,
    rho: GridFunction | None = None,
) -> OpennessScan:
    """A_p constants at p - eps over the grid; reports the largest eps whose
    constant stays below the threshold."""
    if not p > 1:
        raise PreconditionError(f"need p > 1, got {p}")
    eps = np.asarray(eps_grid, dtype=float)
    if np.any(eps <= 0) or np.any(eps >= p - 1):
        raise PreconditionError("eps grid must lie in (0, p-1)")
    rows = []
    admissible = []
    for e in np.sort(eps):
        rep = ap_constant(w, p - e, theta, mode=mode, spec=spec, rho=rho)
        rows.append(ScanRow(float(e), rep.constant))
        if rep.constant <= threshold:
            admissible.append(float(e))
    return OpennessScan(
        rows=rows,
        threshold=threshold,
        largest_admissible=max(admissible) if admissible else None,
    )


@dataclass(frozen=True)
class PowerCheckRow:
    nu: float
    theta: float | None
    constant: float


@dataclass(frozen=True)
class PowerCheckTable:
    rows: list
    threshold: float
    largest_admissible: float | None

    def to_dict(self) -> dict:
        return {
            "rows": [
                {"nu": r.nu, "theta": r.theta, "constant": r.constant} for r in self.rows
            ],
            "threshold": self.threshold,
            "largest_admissible": self.largest_admissible,
        }


def a1_power_check(
    u: Union[Weight, GridFunction],
    nu_grid: np.ndarray,
    rho: GridFunction,
    threshold: float,
    theta_lattice: np.ndarray | None = None,
    spec: BallSampleSpec | None = None,
) -> PowerCheckTable:
    """For each nu, the minimal-theta A_1-type constant of u^nu; reports the
    largest nu that stays below the threshold at some lattice theta."""
    uf = _wfield(u)
    lattice = np.sort(
        np.arange(0.0, 8.01, 0.5) if theta_lattice is None else np.asarray(theta_lattice, dtype=float)
    )
    spec = spec if spec is not None else BallSampleSpec()
    rows = []
    admissible = []
    for nu in np.sort(np.asarray(nu_grid, dtype=float)):
        if not nu > 0:
            raise PreconditionError(f"need nu > 0, got {nu}")
        un = GridFunction(uf.domain, uf.values**nu)
        ratios, bases = infmde_ratios(un, rho, spec)
        found = None
        for t in lattice:
            C = float(np.max(ratios / bases**t))
            if C <= threshold:
                found = (float(t), C)
                break
        if found is None:
            rows.append(PowerCheckRow(float(nu), None, float(np.max(ratios / bases ** lattice[-1]))))
        else:
            rows.append(PowerCheckRow(float(nu), found[0], found[1]))
            admissible.append(float(nu))
    return PowerCheckTable(
        rows=rows,
        threshold=threshold,
        largest_admissible=max(admissible) if admissible else None,
    )
