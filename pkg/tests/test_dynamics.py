import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circleclt import (CircleMap, ConfigError, InitialDensity, MapSchedule,
                       RandomDriver, c1_distance, circle_dist, iterate_orbit,
                       map_bounds, map_deriv, map_eval, map_lift, power_curve,
                       preimages, sample_initial_many, stream)

TWO_PI = 2.0 * math.pi


def admissible_maps():
    return st.builds(
        CircleMap,
        st.integers(min_value=2, max_value=5),
        st.floats(min_value=-0.14, max_value=0.14),
        st.floats(min_value=0.0, max_value=0.999),
    ).filter(lambda m: abs(m.amplitude) < 0.95 * (m.degree - 1) / TWO_PI)


def test_doubling_eval(doubling):
    assert map_eval(doubling, 0.3) == pytest.approx(0.6, abs=1e-15)


def test_degree_three_eval():
    m = CircleMap(3, 0.1, 0.0)
    assert map_eval(m, 0.25) == pytest.approx(0.85, abs=1e-12)


def test_map_bounds_values():
    lam, a_star = map_bounds(CircleMap(3, 0.1, 0.0))
    assert lam == pytest.approx(3.0 - 0.2 * math.pi, rel=1e-12)
    assert a_star == pytest.approx(0.4 * math.pi ** 2, rel=1e-12)


def test_non_expanding_amplitude_rejected():
    with pytest.raises(ConfigError):
        CircleMap(2, 0.2, 0.0)
    with pytest.raises(ConfigError):
        CircleMap(1, 0.0, 0.0)
    with pytest.raises(ConfigError):
        CircleMap(2, 0.0, 1.0)


def test_lift_matches_map_mod_one(perturbed):
    x = np.linspace(0.0, 0.999, 57)
    lift = map_lift(perturbed, x)
    assert np.allclose(lift % 1.0, map_eval(perturbed, x), atol=1e-12)


def test_preimages_doubling(doubling):
    assert np.allclose(preimages(doubling, 0.5), [0.25, 0.75])
    assert np.allclose(preimages(doubling, 0.0), [0.0, 0.5])
    with pytest.raises(ConfigError):
        preimages(doubling, 1.0)


@settings(max_examples=60, deadline=None)
@given(admissible_maps(), st.floats(min_value=0.0, max_value=0.9999))
def test_preimages_invert_the_map(m, x):
    ys = preimages(m, x)
    assert ys.shape == (m.degree,)
    assert np.all((0.0 <= ys) & (ys < 1.0))
    assert np.all(np.diff(ys) > 0)
    assert np.max(circle_dist(map_eval(m, ys), x)) < 1e-10


@settings(max_examples=40, deadline=None)
@given(admissible_maps())
def test_derivative_respects_expansion_bound(m):
    x = np.linspace(0.0, 1.0, 257)
    lam, _ = map_bounds(m)
    assert np.all(map_deriv(m, x) >= lam - 1e-12)


def test_circle_dist_wraps():
    assert circle_dist(0.1, 0.9) == pytest.approx(0.2, abs=1e-15)
    assert circle_dist(0.9, 0.1) == pytest.approx(0.2, abs=1e-15)
    assert circle_dist(0.25, 0.25) == 0.0


def test_c1_distance_sine_amplitude(doubling):
    m = CircleMap(2, 0.05, 0.0)
    expected = 0.05 * (1.0 + TWO_PI)
    assert c1_distance(m, doubling) == pytest.approx(expected, rel=1e-6)
    assert c1_distance(doubling, doubling) == 0.0


def test_iterate_orbit_doubling(doubling):
    sched = MapSchedule.cycled([doubling], 8)
    orbit = iterate_orbit(sched, 0.1, 2)
    assert np.allclose(orbit, [0.1, 0.2, 0.4], atol=1e-14)
    with pytest.raises(ConfigError):
        iterate_orbit(sched, 0.1, 9)


def test_initial_density_normalized_and_sampled():
    dens = InitialDensity(0.5)
    x = np.linspace(0.0, 1.0, 20001)
    mass = np.trapezoid(dens.density(x), x)
    assert mass == pytest.approx(1.0, abs=1e-10)
    assert dens.cdf(0.0) == 0.0
    assert dens.cdf(1.0) == pytest.approx(1.0, abs=1e-12)
    assert dens.log_lip == pytest.approx(TWO_PI, rel=1e-12)
    draws = sample_initial_many(dens, stream(11, "x0"), 4000)
    grid = np.linspace(0.0, 1.0, 201)
    emp = np.searchsorted(np.sort(draws), grid) / draws.size
    assert np.abs(emp - dens.cdf(grid)).max() < 0.035
    with pytest.raises(ConfigError):
        InitialDensity(1.0)


def test_power_curve_holder_and_bounds():
    curve = power_curve(3, (0.03, 0.05, 0.8), (0.0, 0.0, 1.0), 0.8, 0.45)
    assert curve.lambda_min == pytest.approx(3.0 - TWO_PI * 0.08, rel=1e-6)
    assert curve.map_at(1.0).amplitude == pytest.approx(0.08, rel=1e-12)
    assert curve.map_at(0.0).amplitude == pytest.approx(0.03, rel=1e-12)
    with pytest.raises(ConfigError):
        power_curve(3, (0.03, 0.05, 0.8), (0.0, 0.0, 1.0), 0.8, 0.001)


def test_random_driver_default_stationary():
    driver = RandomDriver.default()
    assert len(driver.maps) == 4
    assert np.allclose(driver.stationary, 0.25, atol=1e-12)
    states = driver.sample_states(5, 200, realization=0)
    again = driver.sample_states(5, 200, realization=0)
    other = driver.sample_states(5, 200, realization=1)
    assert np.array_equal(states, again)
    assert not np.array_equal(states, other)
    assert states.shape == (200,)
    assert states.min() >= 0 and states.max() < 4


def test_random_driver_rejects_bad_transitions():
    with pytest.raises(ConfigError):
        RandomDriver(2, (0.0, 0.02), (0.0, 0.5), ((0.9, 0.2), (0.5, 0.5)))
    with pytest.raises(ConfigError):
        RandomDriver(2, (0.0, 0.02), (0.0, 0.5), ((1.0, 0.0), (0.0, 1.0)))


def test_schedule_cycles_and_bounds_checks(alternating_pair):
    sched = MapSchedule.cycled(alternating_pair, 10)
    assert sched.horizon == 10
    assert sched.map_at(1) == alternating_pair[0]
    assert sched.map_at(2) == alternating_pair[1]
    assert sched.map_at(3) == alternating_pair[0]
    lam0 = min(map_bounds(m)[0] for m in alternating_pair)
    assert sched.lambda_min == pytest.approx(lam0, rel=1e-12)
    with pytest.raises(ConfigError):
        sched.map_at(0)
    with pytest.raises(ConfigError):
        sched.map_at(11)


def test_quasistatic_schedule_tracks_curve():
    curve = power_curve(3, (0.03, 0.05, 0.8), (0.0, 0.0, 1.0), 0.8, 0.45)
    sched = MapSchedule.quasistatic(curve, 16)
    assert sched.horizon == 16
    assert sched.map_at(16).amplitude == pytest.approx(0.08, rel=1e-12)
    assert sched.map_at(8).amplitude == pytest.approx(0.03 + 0.05 * 0.5 ** 0.8,
                                                      rel=1e-12)


def test_random_schedule_reproducible():
    driver = RandomDriver.default()
    a = MapSchedule.random(driver, 9, 50, realization=2)
    b = MapSchedule.random(driver, 9, 50, realization=2)
    c = MapSchedule.random(driver, 9, 50, realization=3)
    assert a.fingerprint() == b.fingerprint()
    assert a.fingerprint() != c.fingerprint()
    assert len(a.fingerprint()) == 16
