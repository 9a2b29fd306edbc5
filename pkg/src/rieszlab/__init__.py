"""Numerical laboratory for Schrodinger-Riesz commutators on uniform grids."""

__version__ = "0.1.0"

from .grid import Domain, GridFunction, Ball, Cube
from .errors import PreconditionError, InternalInconsistencyError

__all__ = [
    "Domain",
    "GridFunction",
    "Ball",
    "Cube",
    "PreconditionError",
    "InternalInconsistencyError",
]
