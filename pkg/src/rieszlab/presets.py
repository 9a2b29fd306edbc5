"""Named potential, symbol, and weight presets shared by tests and the CLI."""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError
from .schrodinger_geometry import Potential


def constant_potential(c: float = 1.0, d: int = 3, q: float | None = None) -> Potential:
    if c < 0:
        raise PreconditionError(f"constant potential must be >= 0, got {c}")
    qq = float(d) if q is None else q
    return Potential(
        rule=lambda X: np.full(len(X), float(c)), q=qq, d=d, name=f"constant:{c}"
    )


def hermite_potential(d: int = 3, q: float | None = None) -> Potential:
    """V(x) = |x|^2, the harmonic-oscillator potential."""
    qq = float(d) if q is None else q
    return Potential(rule=lambda X: np.sum(X**2, axis=1), q=qq, d=d, name="hermite")


def power_potential(a: float, d: int = 3, q: float | None = None) -> Potential:
    """V(x) = |x|^a for a >= 0."""
    if a < 0:
        raise PreconditionError(f"power exponent must be >= 0, got {a}")
    qq = float(d) if q is None else q
    return Potential(
        rule=lambda X: np.linalg.norm(X, axis=1) ** a, q=qq, d=d, name=f"power:{a}"
    )


def symbol_rule(kind: str):
    """Pointwise rules for the commutator symbols used across experiments."""
    if kind == "abs-x1":
        return lambda X: np.abs(X[:, 0])
    if kind == "x1-squared":
        return lambda X: X[:, 0] ** 2
    if kind == "constant":
        return lambda X: np.ones(len(X))
    if kind == "log-absx":
        return lambda X: np.log(1.0 + np.linalg.norm(X, axis=1))
    raise PreconditionError(f"unknown symbol preset {kind!r}")


def weight_rule(kind: str, **params):
    """Pointwise rules for weight presets."""
    if kind == "one":
        return lambda X: np.ones(len(X))
    if kind == "power-1px":
        a = float(params.get("a", 0.5))
        return lambda X: (1.0 + np.linalg.norm(X, axis=1)) ** a
    raise PreconditionError(f"unknown weight preset {kind!r}")
