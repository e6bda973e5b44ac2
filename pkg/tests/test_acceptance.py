"""End-to-end acceptance checks, one test per criterion.

The heavier studies load the configurations shipped under configs/ and
run at full scale, so this module takes a few minutes; everything else
is sub-second formula and property checks. Criterion 6 runs once as a
module fixture and criterion 10 reuses its report.
"""

import json
import math
import os

import numpy as np
import pytest

from circleclt import (
    STEIN_CATALOG,
    CircleMap,
    MapSchedule,
    Observable,
    c_sharp,
    c_star,
    choose_K,
    circle_C_tilde,
    estimate_theta,
    grid_points,
    map_eval,
    normal_w1_bound,
    power_curve,
    probe_pairs,
    report_bytes,
    run_qds_study,
    run_rate_study,
    sigma_hat_sq,
    sigma_sq_curve,
    stein_identity_check,
    stein_solve_1d,
    stream,
    sum_lemma_check,
    thm_main_bound,
    transfer_apply_signed,
    uniform_density,
    w1_empirical_pair,
)

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), os.pardir, "configs")


def load_config(name):
    with open(os.path.join(CONFIG_DIR, name)) as fh:
        return json.load(fh)


@pytest.fixture(scope="module")
def rate_report():
    return run_rate_study(load_config("rate_acceptance.json"))


def test_criterion_01_transfer_duality():
    M = 4096
    x = grid_points(M)
    rng = stream(2026, "acceptance", "duality")
    fs = [
        np.cos(2 * np.pi * x),
        np.sin(2 * np.pi * x),
        np.cos(4 * np.pi * x),
        np.sin(6 * np.pi * x),
    ]
    f_at = [
        lambda y: np.cos(2 * np.pi * y),
        lambda y: np.sin(2 * np.pi * y),
        lambda y: np.cos(4 * np.pi * y),
        lambda y: np.sin(6 * np.pi * y),
    ]
    probes = [rho for rho, _ in probe_pairs(M)] + [uniform_density(M)]
    worst = 0.0
    for _ in range(20):
        degree = int(rng.integers(2, 5))
        limit = (degree - 1) / (2.0 * np.pi)
        m = CircleMap(degree, float(rng.uniform(-0.9, 0.9)) * limit, float(rng.uniform(0.0, 1.0)))
        tx = map_eval(m, x)
        for g in probes:
            pushed = transfer_apply_signed(m, g.values)
            for fx, f in zip(fs, f_at):
                lhs = float(np.mean(fx * pushed))
                rhs = float(np.mean(g.values * f(tx)))
                worst = max(worst, abs(lhs - rhs))
    assert worst < 1e-4


def test_criterion_02_analytic_variance_oracles():
    doubling = CircleMap(2, 0.0, 0.0)
    f = Observable.cos()
    sh = sigma_hat_sq(doubling, f, M=4096)
    assert abs(sh.value - 0.5) <= 1e-6
    curve = power_curve(2, (0.0, 0.0, 1.0), (0.0, 0.0, 1.0), 1.0, 0.0)
    vc = sigma_sq_curve(curve, f, 1.0, quad_points=65, M=4096)
    assert abs(vc.value - 0.5) <= 1e-5


def test_criterion_03_probe_contraction_is_log_linear():
    maps = [CircleMap(2, 0.12, 0.1), CircleMap(2, 0.10, 0.35)]
    schedule = MapSchedule.cycled(maps, 40)
    fit = estimate_theta(schedule, probes=30, M=4096)
    for curve, usable, r2 in zip(fit.distances, fit.usable, fit.pair_r2):
        prefix = np.asarray(curve[:usable])
        assert np.all(np.diff(prefix) <= 1e-12)
        assert r2 > 0.99
    assert 0.0 < fit.theta < 1.0


def test_criterion_04_stein_identity_and_class_bounds():
    draws = stream(2026, "acceptance", "stein").normal(0.0, 1.0, 10000)
    for name, h, hprime in STEIN_CATALOG:
        _, _, gap = stein_identity_check(draws, h, 1.0, hprime=hprime)
        assert gap < 1e-6, name
        fb = stein_solve_1d(h, 1.0, hprime=hprime).f_class_bounds()
        assert fb["sup_a"] <= fb["bound_a"], name
        assert fb["sup_a_prime"] <= fb["bound_a_prime"], name
        assert fb["sup_a_second"] <= fb["bound_a_second"], name
    kinked = stein_solve_1d(np.abs, 1.0, kinks=(0.0,)).f_class_bounds()
    assert kinked["sup_a"] <= kinked["bound_a"]
    assert kinked["sup_a_prime"] <= kinked["bound_a_prime"]
    assert kinked["sup_a_second"] <= kinked["bound_a_second"]


def test_criterion_05_scaled_normal_w1_tightness():
    z = stream(2026, "acceptance", "w1-pair").normal(0.0, 1.0, 10 ** 6)
    a, b = 1.5, 0.5
    exact = abs(a - b) * math.sqrt(2.0 / math.pi)
    assert abs(w1_empirical_pair(a * z, b * z) - exact) < 0.002
    assert normal_w1_bound(1.0, 0.0) == pytest.approx(0.797885, abs=5e-7)


def test_criterion_06_rate_reproduction(rate_report):
    beta = rate_report.fits["rate"]["beta"]
    assert -0.7 <= beta <= -0.3
    first = rate_report.rows[0]
    last = rate_report.rows[-1]
    assert first["n"] == 64 and last["n"] == 4096
    assert last["distance"] < 2.0 * first["distance"] * (64.0 / 4096.0) ** 0.3


def test_criterion_07_qds_variance_gap_decay():
    report = run_qds_study(load_config("qds_acceptance.json"))
    gaps = [row["variance_gap"] for row in report.rows]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert report.fits["variance_gap_t=1.0"]["beta"] <= -0.4
    assert all(row["distance"] is None for row in report.rows)


def test_criterion_08_bound_formula_oracles():
    assert c_star(1, 1, 1, 1, 1, 1, 0.5) == pytest.approx(24.0, abs=1e-12)
    assert thm_main_bound(24.0, 100, 10, 0.5, 0.0).value == pytest.approx(
        26.4234375, abs=1e-10
    )
    sharp, prime = c_sharp(1, 1, 1, 1, 0.5)
    assert (sharp, prime) == (48.0, 2.0)
    assert circle_C_tilde(1, 1, 1, 1, 1, 0.25) == pytest.approx(232.0, abs=1e-9)
    choice = choose_K(54, math.exp(-1.0))
    assert (choice.k, choice.valid) == (8, True)


def test_criterion_09_property_sweeps():
    rng = stream(2026, "acceptance", "sweeps")
    for _ in range(1000):
        length = int(rng.integers(1, 40))
        rho = np.concatenate([[1.0], np.cumprod(rng.uniform(0.0, 1.0, length))])
        _, _, holds = sum_lemma_check(rho)
        assert holds
    m = 400
    slack = 6.0 / math.sqrt(m)
    for _ in range(100):
        x = rng.normal(0.0, rng.uniform(0.2, 2.0), m)
        y = rng.uniform(-1.0, 1.0, m) * rng.uniform(0.2, 2.0)
        x -= x.mean()
        y -= y.mean()
        assert w1_empirical_pair(x, y) <= x.std() + y.std() + slack
    for _ in range(100):
        theta = float(rng.uniform(0.05, 0.95))
        n = int(rng.integers(2, 10 ** 6))
        choice = choose_K(n, theta)
        if choice.valid:
            assert choice.k < n


def test_criterion_10_calibrated_bound_dominates(rate_report):
    assert rate_report.metadata["constants_source"] == "calibrated"
    assert len(rate_report.rows) == 7
    for row in rate_report.rows:
        assert row["bound"] >= row["distance"]


def test_criterion_11_reports_are_byte_identical():
    rate_cfg = load_config("rate_acceptance.json")
    rate_cfg["n_grid"] = [16, 32, 64]
    rate_cfg["samples"] = 2000
    rate_cfg["grid"] = 512
    qds_cfg = load_config("qds_small.json")
    qds_cfg["n_grid"] = [16, 32]
    qds_cfg["grid"] = 256
    qds_cfg["quad_points"] = 17
    for cfg, runner in ((rate_cfg, run_rate_study), (qds_cfg, run_qds_study)):
        first = runner(dict(cfg))
        second = runner(dict(cfg))
        assert report_bytes(first, "csv") == report_bytes(second, "csv")
        assert report_bytes(first, "json") == report_bytes(second, "json")
