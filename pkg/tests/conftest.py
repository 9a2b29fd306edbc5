"""Shared fixtures: expensive fields and operator factorizations are built
once per session and reused across test modules."""

import numpy as np
import pytest

from rieszlab.grid import Domain
from rieszlab.presets import constant_potential, hermite_potential
from rieszlab.schrodinger_geometry import critical_radius_field


@pytest.fixture(scope="session")
def hermite_rho_32():
    """Hermite potential and its critical radius field on a grid fine
    enough to resolve rho everywhere (no scan flags)."""
    dom = Domain(3, 2.0, 32)
    V = hermite_potential(3)
    Vf = V.field(dom)
    crf = critical_radius_field(Vf, tol=1e-3)
    assert crf.below_grid_count == 0 and crf.exceeds_box_count == 0
    return dom, Vf, crf.field


@pytest.fixture(scope="session")
def const_field_32():
    dom = Domain(3, 0.75, 32)
    return dom, constant_potential(1.0, 3).field(dom)


@pytest.fixture(scope="session")
def rho_one_2d():
    """Flat unit critical-radius field on a 2d grid, for estimator tests
    that pin rho by hand."""
    from rieszlab.grid import GridFunction

    dom = Domain(2, 8.0, 64)
    return dom, GridFunction(dom, np.ones(dom.num_cells))
