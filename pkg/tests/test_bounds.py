import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circleclt import (ConfigError, DecayConstants, c_sharp, c_star, choose_K,
                       circle_C_multivar, circle_C_tilde, circle_rate_bound,
                       geometric_tail, geometric_weighted_sqrt, l_star,
                       rho_tilde_multivar, rho_tilde_univar,
                       self_normalized_bound, sixth_root_bound,
                       splitting_bound, sum_lemma_check, thm_main_bound,
                       thm_w1_bound)


def test_decay_constants_validation_and_floor():
    c = DecayConstants(0.2, 1.0, 1.0, 1.0, 1.0)
    floored = c.floored(2.0)
    assert floored.theta == pytest.approx(0.5)
    assert c.floored(10.0).theta == pytest.approx(0.2)
    with pytest.raises(ConfigError):
        DecayConstants(1.0, 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ConfigError):
        DecayConstants(0.5, 0.0, 1.0, 1.0, 1.0)


def test_choose_k_examples():
    kc = choose_K(54, math.exp(-1.0))
    assert (kc.k, kc.valid) == (8, True)
    assert kc.n_threshold == pytest.approx(16.0 / (1.0 - math.exp(-1.0)) ** 2,
                                           rel=1e-12)
    assert kc.k + 1 <= kc.k_plus_one_bound
    low = choose_K(20, math.exp(-1.0))
    assert not low.valid


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=0.05, max_value=0.95),
       st.integers(min_value=2, max_value=10 ** 6))
def test_choose_k_valid_implies_room(theta, n):
    kc = choose_K(n, theta)
    if kc.valid:
        assert kc.k < n


def test_geometric_pieces():
    assert geometric_tail(0.5, 10) == pytest.approx(2.0 ** -10, rel=1e-12)
    assert geometric_weighted_sqrt(0.5) == pytest.approx(2.0, rel=1e-12)


def test_sum_lemma_examples():
    lhs, rhs, holds = sum_lemma_check((1.0, 0.0, 0.0))
    assert (lhs, rhs, holds) == (1.0, 2.0, True)
    rho = tuple(0.5 ** i for i in range(20))
    lhs, rhs, holds = sum_lemma_check(rho)
    assert holds
    assert lhs == pytest.approx(4.0, rel=1e-4)
    assert rhs == pytest.approx(8.0, rel=1e-4)
    with pytest.raises(ConfigError):
        sum_lemma_check((0.5, 0.4))
    with pytest.raises(ConfigError):
        sum_lemma_check((1.0, 0.2, 0.3))


def test_c_star_values():
    assert c_star(1, 1.0, 1.0, 1.0, 1.0, 1.0, 0.5) == pytest.approx(24.0)
    assert c_star(1, 1.0, 4.0, 1.0, 1.0, 1.0, 0.5) == pytest.approx(48.0)
    assert c_star(2, 1.0, 1.0, 1.0, 1.0, 1.0, 0.5) == pytest.approx(192.0)


def test_thm_main_bound_value():
    report = thm_main_bound(24.0, 100, 10, 0.5, 0.0)
    assert report.value == pytest.approx(26.4234375, abs=1e-10)
    assert report.pieces["bulk"] == pytest.approx(26.4, abs=1e-12)
    assert report.pieces["centering"] == 0.0
    with pytest.raises(ConfigError):
        thm_main_bound(24.0, 10, 10, 0.5, 0.0)


def test_c_sharp_values():
    assert c_sharp(1.0, 1.0, 1.0, 1.0, 0.5) == pytest.approx((48.0, 2.0))
    assert c_sharp(2.0, 1.0, 1.0, 1.0, 0.5) == pytest.approx((24.0, 2.0))
    with pytest.raises(ConfigError):
        c_sharp(0.0, 1.0, 1.0, 1.0, 0.5)


def test_thm_w1_bound_assembles_pieces():
    report = thm_w1_bound(48.0, 2.0, 100, 10, 0.5, 0.0)
    assert report.pieces["bulk"] == pytest.approx(52.8, rel=1e-12)
    assert report.pieces["tail"] == pytest.approx(48.0 * 2.0 ** -10, rel=1e-12)
    assert report.value == pytest.approx(52.846875, abs=1e-10)


def test_rho_tilde_values():
    assert rho_tilde_univar(2, 0.25, 1.0, 1.0) == pytest.approx(7.0 / 3.0,
                                                                rel=1e-12)
    uni = rho_tilde_univar(3, 0.25, 2.0, 1.5)
    multi = rho_tilde_multivar(3, 1, 0.25, 2.0, 1.5, 1.0, 1.0)
    assert multi == pytest.approx(uni, rel=1e-12)
    assert rho_tilde_multivar(3, 2, 0.25, 2.0, 1.5, 1.0, 1.0) > multi


def test_circle_constants():
    assert circle_C_tilde(1.0, 1.0, 1.0, 1.0, 1.0, 0.25) == pytest.approx(
        232.0, abs=1e-9)
    multi = circle_C_multivar(1, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.25)
    direct = (30.0 * 2.0 / 0.5625 + 2.0 / 1.5 + 4.0 + 2.0 / 0.5)
    assert multi == pytest.approx(direct, rel=1e-12)


def test_rate_bounds():
    rate = circle_rate_bound(232.0, 10 ** 6, 0.25)
    assert rate.value == pytest.approx(232.0 * 1e-3 * math.log(1e6), rel=1e-12)
    assert rate.flags["n_valid"]
    fallback = sixth_root_bound(232.0, 10 ** 6, 0.25)
    assert fallback.value == pytest.approx(320.5198, abs=1e-3)
    assert sixth_root_bound(1.0, 10 ** 6, 0.25).value == pytest.approx(
        2.0 * 1e-1 * math.log(1e6), rel=1e-12)
    with pytest.raises(ConfigError):
        circle_rate_bound(232.0, 10 ** 6, 0.25, p=0.2)


def test_self_normalized_bound_shape():
    full = self_normalized_bound(10.0, 100, 1.0, 1.0)
    assert full.value == pytest.approx(10.0 * 100 ** -0.5 * math.log(100),
                                       rel=1e-12)
    with pytest.raises(ConfigError):
        self_normalized_bound(10.0, 100, 1.0, 2.0)


def test_splitting_bound_example():
    value = splitting_bound(4, 1.0, 1.0, 1.0, 2.0, 1.0, 0.5)
    assert value == pytest.approx(0.75, rel=1e-12)
    assert splitting_bound(8, 1.0, 1.0, 1.0, 2.0, 1.0, 0.5) < value


def test_l_star_value():
    assert l_star(2.0, 1.0) == pytest.approx(8.0, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=0.05, max_value=0.9),
       st.integers(min_value=0, max_value=40))
def test_geometric_tail_matches_series(theta, k):
    series = sum(theta ** i for i in range(k + 1, 2000))
    assert geometric_tail(theta, k) == pytest.approx(series, rel=1e-9)
