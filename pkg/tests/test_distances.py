import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circleclt import (STEIN_CATALOG, ConfigError, NumericalError,
                       TrigTestFunction, matrix_sqrt, normal_w1_bound,
                       smooth_test_distance, sqrt_diff_bound,
                       stein_identity_check, stein_solve_1d, stream,
                       w1_empirical_pair, w1_empirical_vs_normal)

ROOT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def test_w1_point_mass_against_normal():
    assert w1_empirical_vs_normal(np.zeros(10), 1.0) == pytest.approx(
        ROOT_2_OVER_PI, rel=1e-12)
    assert w1_empirical_vs_normal(np.array([1.0, -1.0]), 0.0) == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        w1_empirical_vs_normal(np.array([]), 1.0)
    with pytest.raises(ConfigError):
        w1_empirical_vs_normal(np.zeros(4), -1.0)


def test_w1_normal_samples_are_close():
    s = stream(1, "w1-null").normal(0.0, 1.0, 40000)
    assert w1_empirical_vs_normal(s, 1.0) < 0.02


def test_w1_scaling_and_permutation():
    s = stream(2, "w1-scale").normal(0.0, 1.0, 500)
    base = w1_empirical_vs_normal(s, 1.0)
    for a in (0.5, 2.0, 7.0):
        assert w1_empirical_vs_normal(a * s, a) == pytest.approx(a * base, rel=1e-10)
    shuffled = s.copy()
    stream(3, "w1-perm").shuffle(shuffled)
    assert w1_empirical_vs_normal(shuffled, 1.0) == pytest.approx(base, rel=1e-12)


def test_w1_sigma_continuity():
    s = stream(4, "w1-cont").normal(0.0, 1.0, 300)
    base = w1_empirical_vs_normal(s, 1.0)
    near = w1_empirical_vs_normal(s, 1.0 + 1e-6)
    assert abs(near - base) < 1e-5


def test_w1_empirical_pair():
    assert w1_empirical_pair(np.zeros(2), np.ones(2)) == pytest.approx(1.0)
    a = np.array([0.0, 1.0, 2.0])
    b = np.array([2.0, 0.0, 1.0])
    assert w1_empirical_pair(a, b) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ConfigError):
        w1_empirical_pair(np.zeros(3), np.zeros(4))


def test_normal_w1_bound_values():
    assert normal_w1_bound(1.0, 0.0) == pytest.approx(ROOT_2_OVER_PI, rel=1e-12)
    assert normal_w1_bound(2.0, 2.0) == 0.0
    with pytest.raises(ConfigError):
        normal_w1_bound(-1.0, 1.0)


def test_trig_test_function_gaussian_mean():
    h = TrigTestFunction((1.0,), 0.0)
    sigma = np.array([[1.0]])
    assert h.gauss_mean(sigma) == pytest.approx(math.exp(-0.5), rel=1e-12)
    vals = h(np.array([[0.0], [0.25]]))
    assert vals[0] == pytest.approx(1.0)
    assert h.deriv_bound(2) == pytest.approx(1.0)


def test_smooth_test_distance_point_mass():
    samples = np.zeros((50, 1))
    sigma = np.array([[1.0]])
    dist, err = smooth_test_distance(samples, sigma, TrigTestFunction((1.0,), 0.0))
    assert dist == pytest.approx(1.0 - math.exp(-0.5), rel=1e-12)
    assert err == 0.0
    with pytest.raises(ConfigError):
        smooth_test_distance(samples, np.array([[1.0, 0.0]]),
                             TrigTestFunction((1.0,), 0.0))


def test_matrix_sqrt_and_diff_bound():
    root = matrix_sqrt(np.diag([4.0, 9.0]))
    assert np.allclose(root, np.diag([2.0, 3.0]), atol=1e-12)
    with pytest.raises(ConfigError):
        matrix_sqrt(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(NumericalError):
        matrix_sqrt(np.diag([1.0, -1.0]))
    gap = sqrt_diff_bound(np.diag([4.0, 4.0]), np.diag([1.0, 1.0]))
    assert gap == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_matrix_sqrt_reconstructs_random_spd(key):
    rng = stream(key, "spd")
    a = rng.normal(size=(3, 3))
    sigma = a @ a.T + 0.1 * np.eye(3)
    root = matrix_sqrt(sigma)
    assert np.allclose(root @ root, sigma, atol=1e-9)


def test_stein_linear_h_has_constant_solution():
    sol = stein_solve_1d(lambda w: w, 1.0, hprime=lambda w: np.ones_like(w))
    core = np.abs(sol.w) <= 8.0
    assert np.abs(sol.a[core] + 1.0).max() < 1e-7
    assert sol.residual_max() < 1e-8


def test_stein_constant_h_is_trivial():
    sol = stein_solve_1d(lambda w: np.full_like(w, 2.5), 1.0,
                         hprime=lambda w: np.zeros_like(w))
    assert np.abs(sol.a).max() < 1e-9
    lhs, rhs, gap = stein_identity_check(np.array([0.3, -1.2]),
                                         lambda w: np.full_like(w, 2.5), 1.0)
    assert abs(lhs) < 1e-12 and abs(rhs) < 1e-9 and gap < 1e-9


def test_stein_catalog_residuals_and_bounds():
    for name, h, hprime in STEIN_CATALOG:
        sol = stein_solve_1d(h, 1.0, hprime=hprime)
        assert sol.residual_max() < 1e-8, name
        fb = sol.f_class_bounds()
        assert fb["sup_a"] <= fb["bound_a"] + 1e-9, name
        assert fb["sup_a_prime"] <= fb["bound_a_prime"] + 1e-9, name
        assert fb["sup_a_second"] <= fb["bound_a_second"] + 1e-9, name


def test_stein_kinked_h():
    sol = stein_solve_1d(np.abs, 1.0, kinks=(0.0,))
    assert sol.residual_max() < 1e-8
    fb = sol.f_class_bounds()
    assert fb["sup_a_prime"] <= fb["bound_a_prime"] + 1e-9


def test_stein_identity_with_out_of_window_samples():
    s = np.array([0.0, 0.5, 10.5])
    lhs, rhs, gap = stein_identity_check(s, np.sin, 1.0, hprime=np.cos)
    assert gap < 1e-6


def test_stein_rejects_bad_variance():
    with pytest.raises(ConfigError):
        stein_solve_1d(np.sin, 0.0)
    with pytest.raises(ConfigError):
        stein_solve_1d(np.sin, 1.0, window=(1.0, 2.0))


def test_catalog_is_five_distinct_functions():
    names = [name for name, _, _ in STEIN_CATALOG]
    assert len(names) == 5
    assert len(set(names)) == 5
