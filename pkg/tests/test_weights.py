"""A_p constants, the damped maximal operator, and the A_1-type generator."""

import numpy as np
import pytest

from rieszlab.errors import PreconditionError
from rieszlab.grid import Domain, GridFunction, region_cells
from rieszlab.sampling import BallSampleSpec
from rieszlab.schrodinger_geometry import scan_radii
from rieszlab.weights import (
    Weight,
    a1_power_check,
    ap_constant,
    build_a1_weight,
    fit_pointwise_domination,
    infmde_ratios,
    m_theta,
    openness_scan,
)


def test_weight_validation():
    dom = Domain(2, 1.0, 8)
    with pytest.raises(PreconditionError, match="positive"):
        Weight(GridFunction(dom, np.zeros(dom.num_cells)))
    with pytest.raises(PreconditionError, match="scalar"):
        Weight(GridFunction(dom, np.ones((2, dom.num_cells))))


def test_ap_unit_weight_is_one():
    dom = Domain(2, 1.0, 16)
    w = GridFunction(dom, np.ones(dom.num_cells))
    spec = BallSampleSpec(n_centers=30, n_radii=6, seed=1)
    for p in (1.0, 2.0, 3.0):
        for mode in ("all-balls", "cubes"):
            rep = ap_constant(w, p, 0.0, mode=mode, spec=spec)
            assert rep.constant == pytest.approx(1.0, abs=1e-12)
            assert rep.mode == mode


def test_ap_power_weight_stable_under_refinement():
    # |x| in d = 2 lies well inside A_2; the sampled constant must not
    # drift as the grid refines.
    spec = BallSampleSpec(n_centers=60, n_radii=10, seed=3)
    vals = []
    for n in (32, 64):
        dom = Domain(2, 1.0, n)
        w = GridFunction(dom, np.linalg.norm(dom.cell_centers, axis=1))
        vals.append(ap_constant(w, 2.0, 0.0, spec=spec).constant)
    assert vals[0] > 1.0
    assert abs(vals[1] - vals[0]) <= 0.10 * vals[0]


def test_ap_overflow_goes_to_inf():
    dom = Domain(1, 1.0, 16)
    v = np.ones(dom.num_cells)
    v[3] = 1e-320
    rep = ap_constant(GridFunction(dom, v), 2.0, 0.0, spec=BallSampleSpec(4, 4, seed=0))
    assert np.isinf(rep.constant)


def test_ap_theta_monotone_and_subcritical_subset(rho_one_2d):
    dom, rho = rho_one_2d
    rng = np.random.default_rng(4)
    w = GridFunction(dom, np.exp(0.5 * rng.standard_normal(dom.num_cells)))
    spec = BallSampleSpec(n_centers=40, n_radii=8, seed=5)
    prev = np.inf
    for theta in (0.0, 0.5, 1.0, 2.0):
        cur = ap_constant(w, 2.0, theta, spec=spec, rho=rho).constant
        assert cur <= prev + 1e-12
        prev = cur
    allb = ap_constant(w, 2.0, 0.0, mode="all-balls", spec=spec, rho=rho).constant
    sub = ap_constant(w, 2.0, 0.0, mode="sub-critical-only", spec=spec, rho=rho).constant
    assert sub <= allb + 1e-12


def test_ap_preconditions(rho_one_2d):
    dom, rho = rho_one_2d
    w = GridFunction(dom, np.ones(dom.num_cells))
    with pytest.raises(PreconditionError, match="p"):
        ap_constant(w, 0.5, 0.0)
    with pytest.raises(PreconditionError, match="rho"):
        ap_constant(w, 2.0, 1.0)
    with pytest.raises(PreconditionError, match="mode"):
        ap_constant(w, 2.0, 0.0, mode="spheres")


def test_m_theta_constant_field(rho_one_2d):
    dom, rho = rho_one_2d
    f = GridFunction(dom, np.full(dom.num_cells, 2.5))
    for theta in (0.0, 1.0):
        out = m_theta(f, rho, theta)
        assert np.max(np.abs(out.values - 2.5)) <= 1e-12


def test_m_theta_dominates_and_monotone(rho_one_2d):
    dom, rho = rho_one_2d
    rng = np.random.default_rng(6)
    f = GridFunction(dom, rng.standard_normal(dom.num_cells))
    m0 = m_theta(f, rho, 0.0)
    m1 = m_theta(f, rho, 1.0)
    m2 = m_theta(f, rho, 2.0)
    assert np.all(m0.values >= np.abs(f.values) - 1e-15)
    assert np.all(m1.values <= m0.values + 1e-15)
    assert np.all(m2.values <= m1.values + 1e-15)


def test_m_theta_sublinear(rho_one_2d):
    dom, rho = rho_one_2d
    rng = np.random.default_rng(7)
    f = GridFunction(dom, rng.standard_normal(dom.num_cells))
    g = GridFunction(dom, rng.standard_normal(dom.num_cells))
    s = GridFunction(dom, f.values + g.values)
    lhs = m_theta(s, rho, 0.5).values
    rhs = m_theta(f, rho, 0.5).values + m_theta(g, rho, 0.5).values
    assert np.all(lhs <= rhs + 1e-10)


def test_m_theta_spike_bruteforce():
    # single-cell spike in 1d against a direct loop over the radius grid
    dom = Domain(1, 1.0, 64)
    rho = GridFunction(dom, np.ones(dom.num_cells))
    v = np.zeros(dom.num_cells)
    v[17] = 1.0
    f = GridFunction(dom, v)
    got = m_theta(f, rho, 0.0).values
    want = np.abs(v).copy()
    from rieszlab.grid import Ball

    for i in range(dom.num_cells):
        x = tuple(dom.cell_centers[i])
        for r in scan_radii(dom):
            cells = region_cells(dom, Ball(x, float(r)))
            want[i] = max(want[i], float(np.mean(np.abs(v[cells]))))
    assert np.max(np.abs(got - want)) <= 1e-9
    assert np.all(got > 0)


def test_build_a1_constant_source(rho_one_2d):
    dom, rho = rho_one_2d
    g = GridFunction(dom, np.full(dom.num_cells, 2.0))
    rep = build_a1_weight(g, rho, 1.0, 0.5, spec=BallSampleSpec(20, 6, seed=8))
    assert rep.feasible and rep.violations == 0
    assert rep.beta == 0.0
    assert rep.C == pytest.approx(1.0)
    assert np.max(np.abs(rep.weight.values - 2.0**0.5)) <= 1e-12


def test_build_a1_degenerate_source(rho_one_2d):
    dom, rho = rho_one_2d
    with pytest.raises(PreconditionError, match="degenerate"):
        build_a1_weight(GridFunction(dom, np.zeros(dom.num_cells)), rho, 1.0, 0.5)


def test_build_a1_random_source_heldout(hermite_rho_32):
    dom, _, rho = hermite_rho_32
    rng = np.random.default_rng(9)
    g = GridFunction(dom, rng.standard_normal(dom.num_cells))
    rep = build_a1_weight(g, rho, 1.0, 0.5, spec=BallSampleSpec(60, 10, seed=10))
    assert rep.feasible and rep.violations == 0
    assert np.all(rep.weight.values > 0)
    ratios, bases = infmde_ratios(rep.weight, rho, BallSampleSpec(60, 10, seed=77))
    assert np.sum(ratios > rep.C * bases**rep.beta) == 0


def test_pointwise_domination_unit_weight(rho_one_2d):
    dom, rho = rho_one_2d
    u = GridFunction(dom, np.ones(dom.num_cells))
    fit = fit_pointwise_domination(u, rho)
    assert fit.feasible
    assert fit.exponent == 0.0
    assert fit.C == pytest.approx(1.0)


def test_pointwise_domination_built_weight(hermite_rho_32):
    dom, _, rho = hermite_rho_32
    rng = np.random.default_rng(11)
    g = GridFunction(dom, rng.standard_normal(dom.num_cells))
    rep = build_a1_weight(g, rho, 1.0, 0.5, spec=BallSampleSpec(40, 8, seed=12))
    fit = fit_pointwise_domination(rep.weight, rho)
    assert fit.feasible


def test_openness_scan_unit_weight():
    dom = Domain(2, 1.0, 16)
    w = GridFunction(dom, np.ones(dom.num_cells))
    scan = openness_scan(
        w, 2.0, 0.0, np.array([0.2, 0.5, 0.8]), threshold=1.5,
        spec=BallSampleSpec(20, 6, seed=13),
    )
    assert scan.largest_admissible == pytest.approx(0.8)
    assert all(r.constant == pytest.approx(1.0) for r in scan.rows)


def test_openness_scan_boundary_weight():
    # |x|^1.5 in d = 2: A_{2-eps} needs 1.5 < 2 (1 - eps), so small eps
    # stays tame and eps = 0.9 blows up on the grid.
    dom = Domain(2, 1.0, 64)
    w = GridFunction(dom, np.linalg.norm(dom.cell_centers, axis=1) ** 1.5)
    scan = openness_scan(
        w, 2.0, 0.0, np.array([0.1, 0.5, 0.9]), threshold=50.0,
        spec=BallSampleSpec(40, 8, seed=14),
    )
    assert scan.rows[0].constant <= 50.0
    assert scan.rows[-1].constant > 50.0
    assert scan.largest_admissible is not None and scan.largest_admissible < 0.9
    with pytest.raises(PreconditionError, match="eps"):
        openness_scan(w, 2.0, 0.0, np.array([1.5]), threshold=50.0)


def test_a1_power_check_unit_weight(rho_one_2d):
    dom, rho = rho_one_2d
    u = GridFunction(dom, np.ones(dom.num_cells))
    tab = a1_power_check(
        u, np.array([0.5, 1.0, 2.0]), rho, threshold=1.5,
        spec=BallSampleSpec(20, 6, seed=15),
    )
    assert tab.largest_admissible == pytest.approx(2.0)
    assert all(r.theta == 0.0 and r.constant == pytest.approx(1.0) for r in tab.rows)


def test_a1_power_check_singular_weight():
    # u = |x|^(-1) in d = 3: u^nu stays A_1-type for nu < 3 and the
    # near-origin cells blow the ratio up past that.
    dom = Domain(3, 1.0, 16)
    rho = GridFunction(dom, np.ones(dom.num_cells))
    u = GridFunction(dom, 1.0 / np.linalg.norm(dom.cell_centers, axis=1))
    spec = BallSampleSpec(n_radii=6, centers=((0.0, 0.0, 0.0), (0.5, 0.5, 0.5)), seed=16)
    tab = a1_power_check(
        u, np.array([0.5, 1.0, 3.5]), rho, threshold=10.0,
        theta_lattice=np.array([0.0, 0.5, 1.0]), spec=spec,
    )
    assert tab.largest_admissible == pytest.approx(1.0)
    assert tab.rows[-1].theta is None
    assert tab.rows[-1].constant > 10.0
