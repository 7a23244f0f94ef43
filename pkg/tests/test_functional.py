import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import beta

from symphonic.functional import (
    CoefficientSet,
    Profile,
    evaluate_J,
    grad_J,
    hardy_ratio,
    make_grid,
    potential,
    x_norm,
)
from symphonic.geometry import Mode, ProblemConfig, SingularPointError

from conftest import asymmetric_join, sphere_join

HALF_PI = 0.5 * math.pi


def random_profile(grid, rng, amplitude=0.2):
    """Smooth feasible profile strictly inside the box."""
    t = grid.nodes
    bump = sum(rng.normal(scale=amplitude) * np.sin(2 * j * t) / j for j in range(1, 5))
    values = np.clip(t + bump, 0.05 * t, HALF_PI - 0.05 * (HALF_PI - t))
    values[0], values[-1] = 0.0, HALF_PI
    return Profile(grid, values)


def fd_gradient(p, cfg, step=1e-6):
    out = np.empty(p.grid.n - 1)
    for i in range(1, p.grid.n):
        up, down = p.values.copy(), p.values.copy()
        up[i] += step
        down[i] -= step
        out[i - 1] = (evaluate_J(Profile(p.grid, up), cfg) - evaluate_J(Profile(p.grid, down), cfg)) / (2 * step)
    return out


# grids -----------------------------------------------------------------------

def test_uniform_grid_nodes():
    assert np.allclose(make_grid(4).nodes, [0, math.pi / 8, math.pi / 4, 3 * math.pi / 8, HALF_PI], atol=1e-15)


def test_graded_strength_one_is_uniform():
    assert np.array_equal(make_grid(50, "graded", 1.0).nodes, make_grid(50).nodes)


def test_graded_grid_clusters_at_both_ends():
    grid = make_grid(100, "graded", 2.0)
    assert grid.nodes[1] < math.pi / 200
    assert grid.nodes[0] == 0.0 and grid.nodes[-1] == HALF_PI
    assert np.allclose(grid.nodes, HALF_PI - grid.nodes[::-1], atol=1e-15)


@pytest.mark.parametrize("n", [0, 3, -5, 2.5])
def test_small_grid_rejected(n):
    with pytest.raises(ValueError):
        make_grid(n)


@given(n=st.integers(4, 400), g=st.floats(1.0, 4.0))
def test_grid_strictly_increasing(n, g):
    nodes = make_grid(n, "graded", g).nodes
    assert np.all(np.diff(nodes) > 0) and nodes[0] == 0.0 and nodes[-1] == HALF_PI


# potential -------------------------------------------------------------------

def test_potential_examples():
    co = CoefficientSet(1.0, 1.0, ProblemConfig(m1=1, m2=1))
    assert potential(math.pi / 4, math.pi / 4, co) == pytest.approx(2.0)
    assert potential(1e-3, 0.0, co) == pytest.approx(1.0 / math.cos(1e-3) ** 4)
    hopf = CoefficientSet(1.0, 1.0, ProblemConfig(m1=1, m2=1, mode=Mode.HOPF))
    assert potential(0.3, HALF_PI, hopf) == pytest.approx(0.0, abs=1e-30)
    with pytest.raises(SingularPointError):
        potential(0.0, 0.2, co)


def test_coefficients_follow_axis_ratios():
    cfg = ProblemConfig(m1=3, m2=4, a=1.0, b=1.2, c=1.0, d=0.8, norm1=3, norm2=4)
    co = CoefficientSet.from_config(cfg)
    assert co.a1 == pytest.approx(3.0)
    assert co.a2 == pytest.approx((0.8 / 1.2) ** 4 * 4)
    hopf = CoefficientSet.from_config(ProblemConfig(m1=3, m2=4, b=2.0, c=1.5, d=7.0, norm2=4, mode="hopf"))
    assert hopf.a2 == pytest.approx((1.5 / 2.0) ** 4 * 4)


# J against closed forms ------------------------------------------------------

def test_identity_join_of_circles():
    grid = make_grid(2000)
    assert evaluate_J(Profile.linear(grid), sphere_join(1, 1)) == pytest.approx(1.5, abs=1e-4)


def test_identity_join_of_three_spheres_beta_oracle():
    grid = make_grid(2000)
    expected = 7 * 0.5 * beta(2, 2)
    assert expected == pytest.approx(7 / 12, abs=1e-15)
    assert evaluate_J(Profile.linear(grid), sphere_join(3, 3)) == pytest.approx(expected, abs=1e-4)


@settings(max_examples=20, deadline=None)
@given(m1=st.integers(1, 6), m2=st.integers(1, 6))
def test_identity_join_matches_beta_integral(m1, m2):
    # (1 + m1 + m2) * int cos^m1 sin^m2 = (1 + m1 + m2) / 2 * B((m1+1)/2, (m2+1)/2)
    expected = (1 + m1 + m2) * 0.5 * beta((m1 + 1) / 2, (m2 + 1) / 2)
    got = evaluate_J(Profile.linear(make_grid(1000)), sphere_join(m1, m2))
    assert got == pytest.approx(expected, rel=1e-8)


def test_midpoint_rule_is_available():
    grid = make_grid(2000, quad_points=1)
    assert evaluate_J(Profile.linear(grid), sphere_join(3, 3)) == pytest.approx(7 / 12, abs=1e-4)


def test_evaluation_is_deterministic(asym_cfg):
    p = random_profile(make_grid(300), np.random.default_rng(1))
    assert evaluate_J(p, asym_cfg) == evaluate_J(p, asym_cfg)


def test_pure_dirichlet_term_decreases_with_refinement():
    cfg = ProblemConfig(m1=2, m2=2)
    values = [evaluate_J(Profile.linear(make_grid(n)), cfg) for n in (50, 100, 200, 400)]
    assert all(x > 0 for x in values)
    # a jump profile costs more the finer the grid
    jumps = []
    for n in (50, 100, 200):
        grid = make_grid(n)
        v = np.zeros(n + 1)
        v[-1] = HALF_PI
        jumps.append(evaluate_J(Profile(grid, v), cfg))
    assert jumps[0] < jumps[1] < jumps[2]


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), mode=st.sampled_from(["join", "hopf"]))
def test_J_positive_on_feasible_profiles(seed, mode):
    cfg = ProblemConfig(m1=2, m2=3, a=1.1, b=0.9, c=1.3, d=0.7, norm1=2, norm2=3, mode=mode)
    p = random_profile(make_grid(60), np.random.default_rng(seed))
    assert evaluate_J(p, cfg) > 0


def test_refinement_differences_shrink():
    cfg = asymmetric_join()
    smooth = lambda t: t + 0.2 * np.sin(2 * t)  # noqa: E731
    js = [evaluate_J(Profile.from_function(make_grid(n), smooth), cfg) for n in (100, 200, 400, 800, 1600)]
    gaps = np.abs(np.diff(js))
    assert np.all(np.diff(gaps) < 0)


# gradient --------------------------------------------------------------------

@pytest.mark.parametrize("mode", ["join", "hopf"])
@pytest.mark.parametrize("n", [24, 60])
@pytest.mark.parametrize("quad_points", [1, 3])
def test_gradient_matches_finite_differences(mode, n, quad_points):
    cfg = ProblemConfig(m1=3, m2=4, a=1.0, b=1.2, c=1.0, d=0.8, norm1=3, norm2=4, mode=mode)
    rng = np.random.default_rng(n + quad_points)
    for _ in range(5):
        p = random_profile(make_grid(n, quad_points=quad_points), rng)
        g, fd = grad_J(p, cfg), fd_gradient(p, cfg)
        assert np.linalg.norm(g - fd) / np.linalg.norm(g) < 1e-6


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_directional_derivative(seed):
    cfg = asymmetric_join()
    rng = np.random.default_rng(seed)
    p = random_profile(make_grid(80, "graded", 1.5), rng)
    v = np.zeros(p.grid.n + 1)
    v[1:-1] = rng.normal(size=p.grid.n - 1)
    step = 1e-6
    up = evaluate_J(Profile(p.grid, p.values + step * v), cfg)
    down = evaluate_J(Profile(p.grid, p.values - step * v), cfg)
    exact = float(np.dot(grad_J(p, cfg), v[1:-1]))
    assert (up - down) / (2 * step) == pytest.approx(exact, rel=1e-6)


def test_gradient_antisymmetric_for_symmetric_problem():
    cfg = ProblemConfig(m1=3, m2=3, a=1.3, b=1.3, c=0.7, d=0.7, norm1=3, norm2=3)
    grid = make_grid(64)
    g = grad_J(Profile.from_function(grid, lambda t: t + 0.1 * np.sin(4 * t)), cfg)
    assert np.max(np.abs(g + g[::-1])) < 1e-10 * max(1.0, np.max(np.abs(g)))


# reflection ------------------------------------------------------------------

@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), graded=st.booleans())
def test_J_invariant_under_reflection(seed, graded):
    cfg = asymmetric_join()
    grid = make_grid(90, "graded" if graded else "uniform", 1.7)
    p = random_profile(grid, np.random.default_rng(seed))
    assert evaluate_J(p.reflected(), cfg.swapped()) == pytest.approx(evaluate_J(p, cfg), rel=1e-10)


# norms -----------------------------------------------------------------------

def test_x_norm_of_zero_profile():
    grid = make_grid(40)
    assert x_norm(Profile(grid, np.zeros(41)), lambda t: np.ones_like(t)) == 0.0


def test_x_norm_quartic_homogeneity():
    grid = make_grid(200)
    p = Profile.from_function(grid, lambda t: np.sin(t) ** 2)
    p2 = Profile(grid, 2 * p.values)
    v = lambda t: np.cos(t) * np.sin(t) ** 2  # noqa: E731
    assert x_norm(p2, v) == pytest.approx(16 * x_norm(p, v), rel=1e-13)


def test_x_norm_against_adaptive_quadrature():
    cfg = ProblemConfig(m1=1, m2=1)
    reference, _ = quad(lambda t: (1 + t**4) * math.cos(t) * math.sin(t), 0, HALF_PI, epsabs=1e-13)
    got = x_norm(Profile.linear(make_grid(2000)), lambda t: np.cos(t) ** cfg.m1 * np.sin(t) ** cfg.m2)
    assert got == pytest.approx(reference, abs=1e-4)


def test_hardy_ratio_zero_profile():
    grid = make_grid(50)
    assert hardy_ratio(Profile(grid, np.zeros(51)), ProblemConfig(m1=5, m2=5)) == 0.0


def test_hardy_ratio_stable_under_refinement():
    cfg = ProblemConfig(m1=5, m2=5)
    coarse = hardy_ratio(Profile.from_function(make_grid(2000), np.sin), cfg)
    fine = hardy_ratio(Profile.from_function(make_grid(4000), np.sin), cfg)
    assert np.isfinite(coarse) and coarse > 0
    assert abs(fine - coarse) / coarse < 0.05


def test_hardy_ratio_identity_profile_is_finite():
    cfg = ProblemConfig(m1=4, m2=4)
    r = hardy_ratio(Profile.linear(make_grid(2000)), cfg)
    assert np.isfinite(r) and r > 0
