"""Young functions, Orlicz averages, Holder check, BMO seminorm, JN ratios."""

import numpy as np
import pytest

from rieszlab.errors import PreconditionError
from rieszlab.grid import Ball, Cube, Domain, GridFunction, region_cells
from rieszlab.sampling import BallSampleSpec
from rieszlab.spaces import (
    MIN_OSCILLATION_CELLS,
    YoungFunction,
    bmo_theta_seminorm,
    holder_check,
    jn_ratio,
    orlicz_average,
)

ALL_VARIANTS = [
    YoungFunction.power(2.0),
    YoungFunction.power(3.5),
    YoungFunction.exp_minus_one(),
    YoungFunction.t_log_plus(),
]


def test_young_zero_and_convexity():
    rng = np.random.default_rng(0)
    for phi in ALL_VARIANTS:
        assert phi.forward(0.0) == 0.0
        t = np.sort(rng.uniform(0.0, 50.0, 200))
        v = phi.forward(t)
        assert np.all(np.diff(v) >= 0)
        # midpoint convexity on random pairs
        a, b = rng.uniform(0, 50, 100), rng.uniform(0, 50, 100)
        assert np.all(
            phi.forward(0.5 * (a + b)) <= 0.5 * (phi.forward(a) + phi.forward(b)) + 1e-9
        )


def test_young_inverse_identities():
    y = np.linspace(0.0, 1e3, 501)
    for phi in ALL_VARIANTS:
        back = phi.forward(phi.inverse(y))
        assert np.max(np.abs(back - y)) <= 1e-9 * (1 + np.max(y))
    # forward then inverse, kept below overflow for the exponential
    t = np.linspace(0.0, 600.0, 301)
    phi = YoungFunction.exp_minus_one()
    assert np.max(np.abs(phi.inverse(phi.forward(t)) - t)) <= 1e-9


def test_young_inverse_at_one():
    assert YoungFunction.power(2.0).inverse_at_one() == pytest.approx(1.0)
    assert YoungFunction.exp_minus_one().inverse_at_one() == pytest.approx(np.log(2.0))
    assert YoungFunction.t_log_plus().inverse_at_one() == pytest.approx(1.0)


def test_young_conjugates():
    c = YoungFunction.power(3.0).conjugate()
    assert c.tag == "power" and c.s == pytest.approx(1.5)
    assert YoungFunction.exp_minus_one().conjugate().tag == "t-log-plus"
    with pytest.raises(PreconditionError):
        YoungFunction.t_log_plus().conjugate()
    with pytest.raises(PreconditionError):
        YoungFunction.power(1.0)


def test_young_inequality_pairs():
    # a b <= phi(a) + phi*(b) for both conjugate pairings, no violations.
    rng = np.random.default_rng(1)
    a = 10.0 ** rng.uniform(-3, np.log10(20.0), 100_000)
    b = 10.0 ** rng.uniform(-3, 3, 100_000)
    phi = YoungFunction.exp_minus_one()
    psi = phi.conjugate()
    assert np.sum(a * b > phi.forward(a) + psi.forward(b) + 1e-12) == 0
    p = YoungFunction.power(2.5)
    q = p.conjugate()
    assert np.sum(a * b > p.forward(a) + q.forward(b) + 1e-12) == 0


def _box_field(values):
    dom = Domain(1, 1.0, len(values))
    return dom, GridFunction(dom, np.asarray(values, dtype=float))


def test_orlicz_constant_oracles():
    dom = Domain(2, 1.0, 16)
    c = 3.7
    f = GridFunction(dom, np.full(dom.num_cells, c))
    Q = Cube((0.0, 0.0), 0.8)
    assert orlicz_average(f, Q, YoungFunction.power(2.0)) == pytest.approx(c, rel=1e-7)
    assert orlicz_average(f, Q, YoungFunction.exp_minus_one()) == pytest.approx(
        c / np.log(2.0), rel=1e-7
    )
    assert orlicz_average(f, Q, YoungFunction.t_log_plus()) == pytest.approx(c, rel=1e-7)


def test_orlicz_power_is_lp_mean():
    # For phi(t) = t^s the average is exactly (mean |f|^s)^(1/s).
    rng = np.random.default_rng(2)
    dom, f = _box_field(rng.uniform(-2, 2, 64))
    Q = Ball((0.0,), 0.9)
    cells = region_cells(dom, Q)
    for s in (2.0, 3.0, 4.5):
        want = float(np.mean(np.abs(f.values[cells]) ** s) ** (1.0 / s))
        got = orlicz_average(f, Q, YoungFunction.power(s))
        assert got == pytest.approx(want, rel=1e-7)


def test_orlicz_zero_homogeneity_monotonicity():
    rng = np.random.default_rng(3)
    dom, f = _box_field(rng.standard_normal(128))
    Q = Ball((0.1,), 0.7)
    z = GridFunction(dom, np.zeros(dom.num_cells))
    phi = YoungFunction.exp_minus_one()
    assert orlicz_average(z, Q, phi) == 0.0
    base = orlicz_average(f, Q, phi)
    assert orlicz_average(GridFunction(dom, 3.0 * f.values), Q, phi) == pytest.approx(
        3.0 * base, rel=1e-6
    )
    g = GridFunction(dom, np.abs(f.values) + rng.uniform(0, 1, 128))
    assert orlicz_average(f, Q, phi) <= orlicz_average(g, Q, phi) * (1 + 1e-7)
    with pytest.raises(PreconditionError, match="empty"):
        orlicz_average(f, Ball((50.0,), 0.01), phi)


def test_holder_constant_pair_exact():
    dom = Domain(2, 1.0, 8)
    f = GridFunction(dom, np.full(dom.num_cells, 2.0))
    g = GridFunction(dom, np.full(dom.num_cells, 5.0))
    r = holder_check(f, g, Ball((0.0, 0.0), 0.8), YoungFunction.power(2.0))
    assert r == pytest.approx(0.5, rel=1e-6)


def test_holder_bound_random_fields():
    rng = np.random.default_rng(4)
    dom = Domain(2, 1.0, 16)
    Q = Ball((0.0, 0.0), 0.8)
    for phi in (YoungFunction.power(2.0), YoungFunction.exp_minus_one()):
        for _ in range(25):
            f = GridFunction(dom, rng.standard_normal(dom.num_cells))
            g = GridFunction(dom, rng.standard_normal(dom.num_cells))
            r = holder_check(f, g, Q, phi)
            assert 0.0 <= r <= 1.0 + 1e-9


def test_holder_zero_factor():
    dom = Domain(2, 1.0, 8)
    f = GridFunction(dom, np.ones(dom.num_cells))
    z = GridFunction(dom, np.zeros(dom.num_cells))
    assert holder_check(f, z, Ball((0.0, 0.0), 0.5), YoungFunction.power(2.0)) == 0.0


def test_bmo_constant_function(rho_one_2d):
    dom, rho = rho_one_2d
    b = GridFunction(dom, np.full(dom.num_cells, 4.2))
    rep = bmo_theta_seminorm(b, rho, 0.0, BallSampleSpec(n_centers=20, n_radii=6, seed=5))
    assert rep.seminorm == pytest.approx(0.0, abs=1e-12)


def test_bmo_matches_bruteforce_oscillation(rho_one_2d):
    dom, rho = rho_one_2d
    rng = np.random.default_rng(6)
    b = GridFunction(dom, rng.standard_normal(dom.num_cells))
    spec = BallSampleSpec(n_centers=30, n_radii=8, seed=7)
    rep = bmo_theta_seminorm(b, rho, 0.0, spec)
    best = 0.0
    for ball in spec.balls(dom):
        cells = region_cells(dom, ball)
        if cells.size < MIN_OSCILLATION_CELLS:
            continue
        v = b.values[cells]
        best = max(best, float(np.mean(np.abs(v - np.mean(v)))))
    assert rep.seminorm == pytest.approx(best, rel=1e-12)


def test_bmo_linear_symbol_growth_and_damping(rho_one_2d):
    dom, rho = rho_one_2d
    b = GridFunction(dom, dom.cell_centers[:, 0].copy())
    small = BallSampleSpec(n_centers=40, n_radii=6, r_max=2.0, seed=8)
    large = BallSampleSpec(n_centers=40, n_radii=6, r_max=8.0, seed=8)
    s_small = bmo_theta_seminorm(b, rho, 0.0, small).seminorm
    s_large = bmo_theta_seminorm(b, rho, 0.0, large).seminorm
    # oscillation of x1 over B(x, r) scales like r
    assert s_large >= 1.5 * s_small
    prev = np.inf
    for theta in (0.0, 0.5, 1.0, 2.0):
        cur = bmo_theta_seminorm(b, rho, theta, large).seminorm
        assert cur <= prev + 1e-15
        prev = cur


def test_jn_constant_symbol(rho_one_2d):
    dom, rho = rho_one_2d
    b = GridFunction(dom, np.full(dom.num_cells, 1.3))
    r = jn_ratio(b, Ball((0.0, 0.0), 1.0), 1, YoungFunction.exp_minus_one(), rho, 1.0)
    assert r == pytest.approx(0.0, abs=1e-12)


def test_jn_triangle_oracle(rho_one_2d):
    # || b - b_{2B} ||_{phi,B} <= || b - b_B ||_{phi,B} + |b_B - b_{2B}| / phi^{-1}(1)
    dom, rho = rho_one_2d
    rng = np.random.default_rng(9)
    phi = YoungFunction.exp_minus_one()
    ball = Ball((0.5, -0.25), 1.5)
    cells = region_cells(dom, ball)
    cells2 = region_cells(dom, Ball(ball.center, 3.0))
    for _ in range(10):
        b = GridFunction(dom, rng.standard_normal(dom.num_cells))
        num = jn_ratio(b, ball, 1, phi, rho, 0.0) * 1.0 * (1.0 + 3.0 / 1.0) ** 0.0
        b_B = float(np.mean(b.values[cells]))
        b_2B = float(np.mean(b.values[cells2]))
        centered = GridFunction(dom, b.values - b_B)
        bound = orlicz_average(centered, ball, phi) + abs(b_B - b_2B) / phi.inverse_at_one()
        assert num <= bound * (1 + 1e-6)


def test_jn_linear_symbol_decay_in_k(rho_one_2d):
    dom, rho = rho_one_2d
    b = GridFunction(dom, dom.cell_centers[:, 0].copy())
    ball = Ball((0.0, 0.0), 0.2)
    phi = YoungFunction.exp_minus_one()
    # centered ball: b_{2^k B} = 0 for every k, so the numerator is fixed
    # and the damped ratio must strictly decrease in k.
    rs = [jn_ratio(b, ball, k, phi, rho, 1.0) for k in range(1, 6)]
    assert all(r > 0 for r in rs)
    assert all(rs[i + 1] < rs[i] for i in range(len(rs) - 1))


def test_jn_preconditions(rho_one_2d):
    dom, rho = rho_one_2d
    b = GridFunction(dom, dom.cell_centers[:, 0].copy())
    phi = YoungFunction.exp_minus_one()
    with pytest.raises(PreconditionError, match="k"):
        jn_ratio(b, Ball((0.0, 0.0), 1.0), 0, phi, rho, 1.0)
    with pytest.raises(PreconditionError, match="box"):
        jn_ratio(b, Ball((0.0, 0.0), 5.0), 2, phi, rho, 1.0)
