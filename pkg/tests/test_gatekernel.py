import math

import numpy as np
import pytest

from fastgates import gatekernel
from fastgates.errors import InvalidSequence
from fastgates.gatekernel import KickSequence, ThermalState

PERIOD = 2.0 * math.pi
BASELINE = 0.41123351671205655  # (2/3)(pi/4)^2, the no-gate infidelity


def seq_of(times, zs, gate_time, rep=None):
    return KickSequence(tuple(zip(times, zs)), gate_time, rep)


def test_sequence_validation():
    with pytest.raises(InvalidSequence):
        seq_of([0.2, 0.1], [1, 1], 1.0)  # times must increase
    with pytest.raises(InvalidSequence):
        seq_of([0.1], [0], 1.0)  # zero multiplicity
    with pytest.raises(InvalidSequence):
        seq_of([1.2], [1], 1.0)  # beyond the gate window
    with pytest.raises(InvalidSequence):
        seq_of([-0.1], [1], 1.0)
    with pytest.raises(InvalidSequence):
        KickSequence(((0.1, 1),), 0.0)


def test_sequence_expansion_infinite_rep():
    seq = seq_of([0.1, 0.5], [3, -2], 1.0)
    times, weights = seq.expand()
    assert times.tolist() == [0.1, 0.5]
    assert weights.tolist() == [3.0, -2.0]
    assert seq.n_sdk == 5


def test_sequence_expansion_finite_rep():
    rep = 800.0
    tau = 2.0 * math.pi / rep
    seq = seq_of([0.1, 0.5], [3, -2], 1.0, rep=rep)
    times, weights = seq.expand()
    assert times.tolist() == pytest.approx(
        [0.1, 0.1 + tau, 0.1 + 2 * tau, 0.5, 0.5 + tau]
    )
    assert weights.tolist() == [1.0, 1.0, 1.0, -1.0, -1.0]


def test_sequence_rejects_overlapping_groups_under_rep():
    rep = 800.0
    tau = 2.0 * math.pi / rep
    with pytest.raises(InvalidSequence):
        seq_of([0.1, 0.1 + 1.5 * tau], [2, 1], 1.0, rep=rep)


def test_thermal_state_validation():
    with pytest.raises(ValueError):
        ThermalState(-0.1, 0.0)
    t = ThermalState(0.2, 0.4)
    assert t.nbar("CM") == 0.2
    assert t.nbar("BR") == 0.4


def test_mu_antisymmetry_and_harmonic_limit(trap_q0, trap_q05):
    cm0 = trap_q0.mode("CM")
    mu_c, mu_s = gatekernel.mu_tensors(cm0, trap_q0, 0.8, 0.8)
    assert mu_s == pytest.approx(0.0, abs=1e-14)
    mu_c, mu_s = gatekernel.mu_tensors(cm0, trap_q0, 1.7, 0.4)
    assert (mu_c, mu_s) == pytest.approx((1.0, 0.0), abs=1e-12)

    cm5 = trap_q05.mode("CM")
    rng = np.random.default_rng(5)
    for t, tp in rng.uniform(0.0, 2.0 * PERIOD, size=(100, 2)):
        c1, s1 = gatekernel.mu_tensors(cm5, trap_q05, t, tp)
        c2, s2 = gatekernel.mu_tensors(cm5, trap_q05, tp, t)
        assert c2 == pytest.approx(c1, abs=1e-12)
        assert s2 == pytest.approx(-s1, abs=1e-12)


def test_kappa_harmonic_limit(trap_q0):
    cm = trap_q0.mode("CM")
    k_c, k_s = gatekernel.kappa_tensors(cm, trap_q0, 1.3, 0.6)
    assert (k_c, k_s) == pytest.approx((1.0, 0.0), abs=1e-12)


def test_kappa_matches_finite_difference(trap_q05):
    # kappa carries the first-argument time derivative of mu; cross-check
    # the analytic envelope derivative against central differences
    cm = trap_q05.mode("CM")
    w = cm.omega
    h = 1e-6
    for t, tp in [(1.1, 0.3), (2.9, 1.7), (0.6, 0.2)]:
        k_c, k_s = gatekernel.kappa_tensors(cm, trap_q05, t, tp)
        mu_c, mu_s = gatekernel.mu_tensors(cm, trap_q05, t, tp)
        up_c, up_s = gatekernel.mu_tensors(cm, trap_q05, t + h, tp)
        dn_c, dn_s = gatekernel.mu_tensors(cm, trap_q05, t - h, tp)
        k_s_fd = (up_c - dn_c) / (2.0 * h) / w - mu_s
        k_c_fd = (up_s - dn_s) / (2.0 * h) / w + mu_c
        assert k_c == pytest.approx(k_c_fd, abs=1e-6)
        assert k_s == pytest.approx(k_s_fd, abs=1e-6)


def test_kappa_deviation_vanishes_in_secular_limit():
    from fastgates import trap as trapmod

    devs = []
    for q in (1e-2, 1e-5):
        cfg = trapmod.calibrate(q)
        cm = cfg.mode("CM")
        worst = 0.0
        for t, tp in [(1.1, 0.3), (4.9, 2.0)]:
            k_c, k_s = gatekernel.kappa_tensors(cm, cfg, t, tp)
            worst = max(worst, abs(k_c - 1.0), abs(k_s))
        devs.append(worst)
    assert devs[1] < devs[0] * 2e-2
    assert devs[1] < 1e-3


def test_entangling_phase_trivial_cases(trap_q05):
    assert gatekernel.entangling_phase(KickSequence((), 1.0), trap_q05) == 0.0
    single = KickSequence(((0.4, 1),), 1.0)
    assert gatekernel.entangling_phase(single, trap_q05) == 0.0


def test_displacement_trivial_and_single_kick(trap_q0):
    empty = KickSequence((), PERIOD)
    for mode in trap_q0.modes:
        assert gatekernel.residual_displacement(empty, trap_q0, mode) == (0.0, 0.0)

    t1 = 0.3 * PERIOD
    seq = KickSequence(((t1, 1),), PERIOD)
    mode = trap_q0.mode("CM")
    dx_cm, dy_cm = gatekernel.residual_displacement(seq, trap_q0, mode)
    assert dx_cm == pytest.approx(
        math.sqrt(2.0) * mode.eta_mode * math.sin(mode.omega * (PERIOD - t1)), abs=1e-12
    )
    assert dy_cm == pytest.approx(
        math.sqrt(2.0) * mode.eta_mode * math.cos(mode.omega * (PERIOD - t1)), abs=1e-12
    )


def test_infidelity_floor_and_baseline(trap_q0, vacuum):
    zero = gatekernel.GateMetrics(
        theta=math.pi / 4.0, phase_error=0.0,
        displacements=((0.0, 0.0), (0.0, 0.0)), infidelity=0.0, n_sdk=0,
    )
    assert gatekernel.infidelity(zero.phase_error, zero.displacements, trap_q0, vacuum) == 0.0
    empty = gatekernel.evaluate(KickSequence((), PERIOD), trap_q0, vacuum)
    assert empty.infidelity == pytest.approx(BASELINE, abs=1e-15)
    assert empty.theta == 0.0
    assert empty.displacements == ((0.0, 0.0), (0.0, 0.0))


def test_motional_error_scales_with_occupation(trap_q05):
    seq = KickSequence(((0.2 * PERIOD, 1), (0.5 * PERIOD, -1)), PERIOD)
    cold = gatekernel.evaluate(seq, trap_q05, ThermalState(0.0, 0.0))
    warm = gatekernel.evaluate(seq, trap_q05, ThermalState(0.5, 0.5))
    # (1/2 + nbar) doubles from 1/2 to 1, so the motional part must too
    phase_part = (2.0 / 3.0) * cold.phase_error**2
    motional_cold = cold.infidelity - phase_part
    motional_warm = warm.infidelity - phase_part
    assert motional_warm == pytest.approx(2.0 * motional_cold, rel=1e-9)


def test_two_kick_secular_phase(trap_q0, vacuum):
    t1, t2 = 0.2 * PERIOD, 0.8 * PERIOD
    seq = KickSequence(((t1, 1), (t2, 1)), PERIOD)
    metrics = gatekernel.evaluate(seq, trap_q0, vacuum)
    ref = 0.0
    for label in ("CM", "BR"):
        m = trap_q0.mode(label)
        ref += (
            8.0 * m.eta_mode**2 * m.couplings[0] * m.couplings[1]
            * math.sin(m.omega * (t2 - t1))
        )
    assert metrics.theta == pytest.approx(ref, abs=1e-9)


def test_evaluate_is_deterministic(trap_q05, vacuum):
    seq = KickSequence(((0.6, 2), (2.3, -1), (4.0, 3)), PERIOD)
    a = gatekernel.evaluate(seq, trap_q05, vacuum)
    b = gatekernel.evaluate(seq, trap_q05, vacuum)
    assert a == b


def test_evaluate_matches_expanded_kick_pipeline(trap_q05, vacuum):
    rep = 800.0
    seq = seq_of([0.5, 2.0, 4.1], [2, -3, 1], PERIOD, rep=rep)
    metrics = gatekernel.evaluate(seq, trap_q05, vacuum)
    times, weights = seq.expand()
    raw = gatekernel.evaluate_kicks(times, weights, PERIOD, trap_q05, vacuum)
    assert metrics.theta == raw.theta
    assert metrics.displacements == raw.displacements
    assert metrics.infidelity == raw.infidelity
    assert metrics.n_sdk == seq.n_sdk
