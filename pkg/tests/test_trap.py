import math

import numpy as np
import pytest

from fastgates import floquet, trap
from fastgates.errors import CalibrationFailure
from fastgates.floquet import MathieuParams


def test_harmonic_limit_dc_parameter(trap_q0):
    # (2 / rf_ratio)^2 with rf_ratio = 40, up to one ulp from the root find
    assert trap_q0.a_cm == pytest.approx(0.0025, abs=1e-15)
    assert trap_q0.mode("CM").omega == pytest.approx(1.0, abs=1e-12)


def test_mode_splitting_sets_breathing_frequency(trap_q01):
    br = trap_q01.mode("BR")
    assert br.omega == pytest.approx(0.986, abs=1e-12)
    assert br.beta / trap_q01.mode("CM").beta == pytest.approx(0.986, rel=1e-10)


def test_deep_modulation_dc_parameter(trap_q05):
    assert trap_q05.a_cm == pytest.approx(-0.11954805610695013, abs=1e-10)
    # round trip: the calibrated a must reproduce the target exponent
    p = MathieuParams(trap_q05.a_cm, 0.5, 40.0)
    assert floquet.characteristic_exponent(p) == pytest.approx(0.05, abs=1e-10)


def test_calibrate_rejects_degenerate_splitting():
    with pytest.raises(CalibrationFailure):
        trap.calibrate(0.1, chi=-1.0)


def test_coulomb_shift_zero_coupling():
    a_cm, a_br = trap.coulomb_mode_shift(0.0025, 0.0)
    assert a_br == a_cm == 0.0025


def test_coulomb_shift_sign_convention():
    # positive normalized coupling must lower the breathing-mode frequency
    a_cm, a_br = trap.coulomb_mode_shift(0.0025, 0.02)
    assert a_br < a_cm
    cfg = trap.calibrate(0.01)
    assert cfg.mode("BR").omega < cfg.mode("CM").omega


def test_coulomb_shift_consistent_with_calibration(trap_q01):
    # the gamma that maps a_cm onto the calibrated a_br must equal the one
    # implied by the frequency targets themselves
    gamma = trap_q01.a_cm - trap_q01.a_br
    a_cm, a_br = trap.coulomb_mode_shift(trap_q01.a_cm, gamma)
    assert a_br == pytest.approx(trap_q01.a_br, abs=1e-8)
    p = MathieuParams(a_br, 0.01, 40.0)
    beta_ratio = floquet.characteristic_exponent(p) / trap_q01.mode("CM").beta
    assert beta_ratio == pytest.approx(0.986, abs=1e-8)


def test_hessian_inverse_cube_scaling():
    p = MathieuParams(0.0025, 0.01, 40.0)
    lam_cm_1, lam_br_1, _ = trap.hessian_eigenvalues(1.0, p)
    lam_cm_2, lam_br_2, _ = trap.hessian_eigenvalues(2.0, p)
    assert lam_cm_1 == lam_cm_2  # centre of mass ignores the ion spacing
    shift_1 = lam_cm_1[0] - lam_br_1[0]
    shift_2 = lam_cm_2[0] - lam_br_2[0]
    assert shift_1 / shift_2 == pytest.approx(8.0, rel=1e-12)


def test_hessian_far_separation_degenerate():
    p = MathieuParams(0.0025, 0.01, 40.0)
    lam_cm, lam_br, _ = trap.hessian_eigenvalues(1e6, p)
    assert lam_br[0] == pytest.approx(lam_cm[0], rel=1e-12)
    assert lam_br[1] == lam_cm[1]


def test_mode_vectors():
    cfg = trap.calibrate(0.01)
    s = 1.0 / math.sqrt(2.0)
    assert cfg.mode("CM").couplings == pytest.approx((s, s))
    assert cfg.mode("BR").couplings == pytest.approx((-s, s))
    p = MathieuParams(0.0025, 0.01, 40.0)
    _, _, vecs = trap.hessian_eigenvalues(1.0, p)
    assert vecs[0] == pytest.approx((s, s))
    assert vecs[1] == pytest.approx((-s, s))


def test_mean_occupation_limits():
    assert trap.mean_occupation(1.0, 0.0) == 0.0
    assert trap.mean_occupation(1.0, 1.0 / math.log(2.0)) == pytest.approx(1.0, rel=1e-14)
    for ratio in (50.0, 120.0, 500.0):
        nbar = trap.mean_occupation(1.0, ratio)
        assert nbar == pytest.approx(ratio - 0.5, rel=1e-2)


def test_with_rf_phase_preserves_operating_point(trap_q05):
    shifted = trap_q05.with_rf_phase(0.7)
    assert shifted.rf_phase == 0.7
    assert shifted.a_cm == trap_q05.a_cm
    assert shifted.a_br == trap_q05.a_br
    assert shifted.mode("CM").beta == pytest.approx(trap_q05.mode("CM").beta, abs=1e-12)


def test_mathieu_params_accessor(trap_q05):
    p = trap_q05.mathieu_params(trap_q05.mode("BR"))
    assert p.a == trap_q05.a_br
    assert p.q == 0.5
    assert p.rf_ratio == 40.0
