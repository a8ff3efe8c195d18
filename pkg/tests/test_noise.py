"""Noise channels: population bound, kick-error mixture, parameter jitter."""

import math
import warnings

import numpy as np
import pytest

from fastgates import noise
from fastgates.errors import DomainError, TruncationWarning
from fastgates.noise import (
    NoiseChannel,
    mc_parameter_noise,
    mc_sdk_errors,
    mc_sdk_errors_direct,
    population_bound,
)


def test_population_bound_values():
    assert population_bound(0.73, 50, 0.0) == 0.73
    assert abs(population_bound(1.0, 40, 0.007) - 0.5184) < 1e-12
    # kick counts in the low twenties keep the floor near 70%
    assert 0.69 < population_bound(1.0, 23, 0.007) < 0.72


def test_population_bound_domain():
    with pytest.raises(DomainError):
        population_bound(1.0, 40, -1e-3)
    with pytest.raises(DomainError):
        population_bound(1.0, 200, 0.005)


def test_population_bound_monotone():
    eps_grid = np.linspace(0.0, 0.02, 9)
    bounds = [population_bound(1.0, 30, e) for e in eps_grid]
    assert all(b1 > b2 for b1, b2 in zip(bounds, bounds[1:]))
    n_grid = range(1, 120, 7)
    bounds_n = [population_bound(1.0, n, 0.007) for n in n_grid]
    assert all(b1 > b2 for b1, b2 in zip(bounds_n, bounds_n[1:]))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "cosmic_rays", "sigma": 0.1},
        {"kind": "sdk_error", "sigma": -0.1},
        {"kind": "sdk_error", "sigma": 0.1, "samples": 0},
        {"kind": "sdk_error", "sigma": 0.1, "m_max": -1},
        {"kind": "sdk_error", "sigma": 0.1, "flip_prob": 1.5},
        {"kind": "sdk_error", "sigma": 0.1, "bins": 0},
    ],
)
def test_channel_validation(kwargs):
    with pytest.raises(ValueError):
        NoiseChannel(**kwargs)


def test_kind_routing_is_enforced(small_solution, vacuum):
    with pytest.raises(ValueError):
        mc_sdk_errors(
            small_solution, NoiseChannel(kind="rf_phase", sigma=0.1), vacuum
        )
    with pytest.raises(ValueError):
        mc_parameter_noise(
            small_solution, NoiseChannel(kind="sdk_error", sigma=0.007), vacuum
        )


def test_sdk_error_zero_rate_point_mass(small_solution, vacuum):
    ch = NoiseChannel(kind="sdk_error", sigma=0.0, samples=8, m_max=1)
    report, mixture = mc_sdk_errors(small_solution, ch, vacuum)
    assert report.mean == report.extras["baseline"]
    assert math.isclose(
        report.mean, small_solution.metrics.infidelity, rel_tol=1e-12
    )
    assert report.variance == 0.0
    assert report.extras["stratum_weights"] == [1.0, 0.0]
    assert mixture.tail_mass == 0.0


def test_sdk_error_weights_sum_to_one(small_solution, vacuum):
    ch = NoiseChannel(kind="sdk_error", sigma=0.007, samples=20, m_max=5)
    report, mixture = mc_sdk_errors(small_solution, ch, vacuum)
    weights = report.extras["stratum_weights"]
    assert all(w >= 0.0 for w in weights)
    assert mixture.tail_mass >= 0.0
    assert math.fsum([*weights, mixture.tail_mass]) == 1.0
    assert abs(math.fsum(report.hist_mass) - 1.0) < 1e-12


def test_sdk_error_truncation_warning(small_solution, vacuum):
    shallow = NoiseChannel(kind="sdk_error", sigma=0.007, samples=4, m_max=3)
    with pytest.warns(TruncationWarning):
        mc_sdk_errors(small_solution, shallow, vacuum)
    deep = NoiseChannel(kind="sdk_error", sigma=0.007, samples=4, m_max=5)
    with warnings.catch_warnings():
        warnings.simplefilter("error", TruncationWarning)
        mc_sdk_errors(small_solution, deep, vacuum)


def test_sdk_error_mean_fidelity(small_solution, vacuum):
    # per-kick failure rate 0.007 on an effectively-secular solution keeps
    # the average gate fidelity above 90%
    ch = NoiseChannel(kind="sdk_error", sigma=0.007, samples=400, m_max=5)
    report, mixture = mc_sdk_errors(small_solution, ch, vacuum)
    assert 0.9 < 1.0 - report.mean < 1.0
    assert report.mean > small_solution.metrics.infidelity
    assert mixture.tail_mass < 1e-4
    assert report.samples == 400 * 5


def test_sdk_error_deterministic(small_solution, vacuum):
    ch = NoiseChannel(kind="sdk_error", sigma=0.007, samples=60, m_max=4)
    a, mix_a = mc_sdk_errors(small_solution, ch, vacuum)
    b, mix_b = mc_sdk_errors(small_solution, ch, vacuum)
    assert a.mean == b.mean
    assert a.variance == b.variance
    assert np.array_equal(a.hist_mass, b.hist_mass)
    assert mix_a.raw_mean == mix_b.raw_mean


def test_sdk_error_crn_changes_stream(small_solution, vacuum):
    base = NoiseChannel(kind="sdk_error", sigma=0.007, samples=60, m_max=4)
    crn = NoiseChannel(kind="sdk_error", sigma=0.007, samples=60, m_max=4,
                       crn=True)
    r0, _ = mc_sdk_errors(small_solution, base, vacuum)
    r1, _ = mc_sdk_errors(small_solution, crn, vacuum)
    assert r0.mean != r1.mean


def test_sdk_error_mean_monotone_in_rate(small_solution, vacuum):
    lo = NoiseChannel(kind="sdk_error", sigma=0.003, samples=400, m_max=5)
    hi = NoiseChannel(kind="sdk_error", sigma=0.007, samples=400, m_max=5)
    r_lo, _ = mc_sdk_errors(small_solution, lo, vacuum)
    r_hi, _ = mc_sdk_errors(small_solution, hi, vacuum)
    margin = 2.0 * math.hypot(
        math.sqrt(r_lo.variance / r_lo.samples),
        math.sqrt(r_hi.variance / r_hi.samples),
    )
    assert r_hi.mean > r_lo.mean + margin


def test_sdk_stratified_matches_direct(small_solution, vacuum):
    strat_ch = NoiseChannel(kind="sdk_error", sigma=0.007, samples=400, m_max=5)
    direct_ch = NoiseChannel(kind="sdk_error", sigma=0.007, samples=800, m_max=5)
    stratified, _ = mc_sdk_errors(small_solution, strat_ch, vacuum)
    direct = mc_sdk_errors_direct(small_solution, direct_ch, vacuum)
    se = math.hypot(
        math.sqrt(stratified.variance / stratified.samples),
        math.sqrt(direct.variance / direct.samples),
    )
    assert abs(stratified.mean - direct.mean) < 3.0 * se


def test_param_sigma_zero_short_circuit(small_solution, vacuum):
    ch = NoiseChannel(kind="timing_jitter", sigma=0.0, samples=16)
    report = mc_parameter_noise(small_solution, ch, vacuum)
    assert report.mean == small_solution.metrics.infidelity
    assert report.variance == 0.0
    assert report.samples == 1
    assert report.extras["degenerate"] is True


def test_rep_period_channel(small_solution, rep_solution, vacuum):
    ch = NoiseChannel(kind="rep_period", sigma=1e-5 / 800.0, samples=100)
    with pytest.raises(DomainError):
        mc_parameter_noise(small_solution, ch, vacuum)
    report = mc_parameter_noise(rep_solution, ch, vacuum)
    assert report.samples == 100
    # spacing noise this small barely moves the mean
    assert abs(report.mean - rep_solution.metrics.infidelity) < 1e-9


def test_timing_jitter_hits_high_q_harder(small_solution, q05_solution, vacuum):
    # same absolute timing width; the deep-modulation solution degrades by
    # more than an order of magnitude beyond the near-secular one
    sigma_t = 2.0 * math.pi * 1e-5
    ch = NoiseChannel(kind="timing_jitter", sigma=sigma_t, samples=200)
    r01 = mc_parameter_noise(small_solution, ch, vacuum)
    r05 = mc_parameter_noise(q05_solution, ch, vacuum)
    d01 = r01.mean - small_solution.metrics.infidelity
    d05 = r05.mean - q05_solution.metrics.infidelity
    assert 0.0 < d01 < 1e-5
    assert 1e-5 < d05 < 5e-4
    assert d05 > 10.0 * d01
    assert "min_gap_enforcement" in r05.extras


def test_rf_phase_ordering(small_solution, q05_solution, vacuum):
    ch = NoiseChannel(kind="rf_phase", sigma=0.1, samples=200)
    r01 = mc_parameter_noise(small_solution, ch, vacuum)
    r05 = mc_parameter_noise(q05_solution, ch, vacuum)
    d01 = r01.mean - small_solution.metrics.infidelity
    d05 = r05.mean - q05_solution.metrics.infidelity
    # near-secular gates barely see the drive phase
    assert abs(d01) < 1e-4
    assert d05 > 10.0 * max(d01, 1e-6)
    assert r01.extras["failed_samples"] == 0


def test_mode_splitting_recalibrates(small_solution, vacuum):
    ch = NoiseChannel(kind="mode_splitting", sigma=1e-4, samples=40)
    report = mc_parameter_noise(small_solution, ch, vacuum)
    assert report.extras["failed_samples"] == 0
    assert report.variance > 0.0
    assert report.mean > small_solution.metrics.infidelity
