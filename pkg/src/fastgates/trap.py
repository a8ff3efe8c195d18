"""Calibrated two-ion trap configurations in dimensionless trap units.

Everything is referenced to the center-of-mass secular frequency: omega_CM
is 1, time is measured in 1/omega_CM, and gate durations are quoted in trap
periods 2 pi. Calibration fixes the secular frequencies (omega_CM,
omega_BR) = (1, 1 + chi) for every micromotion amplitude q_x by solving the
DC parameter a_alpha of each radial mode so its Floquet exponent lands on
beta_alpha = 2 omega_alpha / rf_ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from scipy.optimize import brentq

from . import floquet
from .errors import CalibrationFailure, InvalidSequence, NotStable
from .floquet import FloquetSolution, MathieuParams

_SQ2 = math.sqrt(0.5)

# ion-to-mode coupling matrix rows (b_A, b_B); orthonormal
CM_COUPLINGS = (_SQ2, _SQ2)
BR_COUPLINGS = (-_SQ2, _SQ2)


@dataclass(frozen=True, eq=False)
class ModeSpec:
    """One calibrated radial normal mode."""

    label: str
    omega: float
    a: float
    beta: float
    eta_mode: float
    couplings: tuple[float, float]
    floquet: FloquetSolution


@dataclass(frozen=True, eq=False)
class TrapConfig:
    """Fully calibrated two-ion trap operating point."""

    rf_ratio: float
    rf_phase: float
    q_x: float
    chi: float
    eta: float
    a_cm: float
    a_br: float
    modes: tuple[ModeSpec, ModeSpec]

    def mode(self, label: str) -> ModeSpec:
        for m in self.modes:
            if m.label == label:
                return m
        raise KeyError(label)

    def mathieu_params(self, mode: ModeSpec) -> MathieuParams:
        return MathieuParams(mode.a, self.q_x, self.rf_ratio, self.rf_phase)

    def with_rf_phase(self, rf_phase: float) -> "TrapConfig":
        """Same trap with a different drive phase.

        beta and the Fourier coefficients do not depend on the phase, so the
        Floquet solutions carry over unchanged.
        """
        return replace(self, rf_phase=float(rf_phase))


def _beta_of(a: float, q: float, rf_ratio: float, tol: float) -> float | None:
    try:
        return floquet.characteristic_exponent(MathieuParams(a, q, rf_ratio), tol=tol)
    except NotStable:
        return None


def _solve_dc_parameter(
    beta_target: float, q: float, rf_ratio: float, beta_tol: float
) -> float:
    """a such that the characteristic exponent equals beta_target.

    beta is monotone increasing in a across the first stability tongue, so
    a safeguarded bracket walk plus brentq suffices. The walk has to dodge
    the unstable region below the tongue floor.
    """
    if q == 0.0:
        return beta_target * beta_target
    inner_tol = min(beta_tol * 1e-1, 1e-13)

    def g(a: float) -> float:
        b = _beta_of(a, q, rf_ratio, inner_tol)
        if b is None:
            raise NotStable(f"a={a} unstable during calibration")
        return b - beta_target

    guess = beta_target * beta_target - 0.5 * q * q
    step = max(q * q / 16.0, 1e-3)
    # find a stable anchor near the lowest-order estimate; once q is large
    # the estimate can miss the narrow tongue on either side, so probe both
    anchor = None
    g_anchor = None
    for k in range(200):
        cands = (guess,) if k == 0 else (guess - k * step, guess + k * step)
        for cand in cands:
            b = _beta_of(cand, q, rf_ratio, inner_tol)
            if b is not None:
                anchor, g_anchor = cand, b - beta_target
                break
        if anchor is not None:
            break
    if g_anchor is None:
        raise CalibrationFailure(
            f"no stable DC parameter found near a={guess} for q={q}"
        )
    if g_anchor == 0.0:
        return anchor
    if g_anchor < 0.0:
        lo, hi = anchor, None
        unstable_ceil = None
        s = step
        for _ in range(200):
            cand = lo + s
            b = _beta_of(cand, q, rf_ratio, inner_tol)
            if b is None:
                unstable_ceil = cand
                break
            if b - beta_target > 0.0:
                hi = cand
                break
            lo = cand
            s *= 2.0
        if hi is None and unstable_ceil is not None:
            # bisect back from the unstable ceiling until a stable point
            # with beta above target appears
            floor, ceil = lo, unstable_ceil
            for _ in range(200):
                mid = 0.5 * (floor + ceil)
                b = _beta_of(mid, q, rf_ratio, inner_tol)
                if b is None:
                    ceil = mid
                elif b - beta_target > 0.0:
                    hi = mid
                    break
                else:
                    floor = mid
        if hi is None:
            raise CalibrationFailure(f"no upper bracket for beta={beta_target}, q={q}")
    else:
        hi = anchor
        lo = None
        unstable_floor = None
        s = step
        for _ in range(200):
            cand = hi - s
            b = _beta_of(cand, q, rf_ratio, inner_tol)
            if b is None:
                unstable_floor = cand
                break
            if b - beta_target < 0.0:
                lo = cand
                break
            hi = cand
            s *= 2.0
        if lo is None and unstable_floor is not None:
            # bisect between the unstable floor and the stable side until a
            # stable point with beta below target appears
            floor, ceil = unstable_floor, hi
            for _ in range(200):
                mid = 0.5 * (floor + ceil)
                b = _beta_of(mid, q, rf_ratio, inner_tol)
                if b is None:
                    floor = mid
                elif b - beta_target < 0.0:
                    lo = mid
                    break
                else:
                    ceil = mid
        if lo is None:
            raise CalibrationFailure(f"no lower bracket for beta={beta_target}, q={q}")
    root = brentq(g, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    if abs(g(root)) > beta_tol:
        raise CalibrationFailure(
            f"calibration residual {abs(g(root))} above {beta_tol} at a={root}"
        )
    return float(root)


def calibrate(
    q_x: float,
    rf_ratio: float = 40.0,
    chi: float = -1.4e-2,
    eta: float = 0.15,
    rf_phase: float = 0.0,
    beta_tol: float = 1e-12,
) -> TrapConfig:
    """Build a calibrated TrapConfig at fixed secular frequencies.

    Solves a_alpha per mode so that omega_CM = 1 and omega_BR = 1 + chi in
    trap units, then populates Floquet solutions, couplings, and per-mode
    Lamb-Dicke factors eta_alpha = eta sqrt(omega_CM / omega_alpha).
    """
    if 1.0 + chi <= 0.0:
        raise CalibrationFailure(f"chi={chi} puts the breathing mode at zero frequency")
    targets = {"CM": 1.0, "BR": 1.0 + chi}
    couplings = {"CM": CM_COUPLINGS, "BR": BR_COUPLINGS}
    modes = []
    for label in ("CM", "BR"):
        omega_t = targets[label]
        beta_t = 2.0 * omega_t / rf_ratio
        if not 0.0 < beta_t < 1.0:
            raise CalibrationFailure(
                f"target beta={beta_t} for {label} outside (0, 1); raise rf_ratio"
            )
        a = _solve_dc_parameter(beta_t, q_x, rf_ratio, beta_tol)
        p = MathieuParams(a, q_x, rf_ratio, rf_phase)
        sol = floquet.solve_mode(p, tol=min(beta_tol * 1e-1, 1e-13))
        if abs(sol.beta - beta_t) > beta_tol:
            raise CalibrationFailure(
                f"{label}: |beta - target| = {abs(sol.beta - beta_t)} > {beta_tol}"
            )
        modes.append(
            ModeSpec(
                label=label,
                omega=sol.omega,
                a=a,
                beta=sol.beta,
                eta_mode=0.0,  # filled below once omega_CM is known
                couplings=couplings[label],
                floquet=sol,
            )
        )
    omega_cm = modes[0].omega
    modes = [
        replace(m, eta_mode=eta * math.sqrt(omega_cm / m.omega)) for m in modes
    ]
    return TrapConfig(
        rf_ratio=rf_ratio,
        rf_phase=rf_phase,
        q_x=q_x,
        chi=chi,
        eta=eta,
        a_cm=modes[0].a,
        a_br=modes[1].a,
        modes=(modes[0], modes[1]),
    )


def coulomb_mode_shift(a_x: float, gamma_norm: float) -> tuple[float, float]:
    """DC parameters of the two radial modes given the Coulomb curvature.

    The center-of-mass mode does not feel the ion-ion force; the breathing
    mode's effective DC parameter is lowered by the dimensionless Coulomb
    curvature, which is what makes chi negative.
    """
    return float(a_x), float(a_x - gamma_norm)


def hessian_eigenvalues(d_gap: float, p: MathieuParams):
    """Eigen-decomposition of the two-ion radial Hessian.

    Each time-dependent eigenvalue is returned as a pair (offset,
    cos_amplitude) meaning Lambda(t) = offset + cos_amplitude cos(W t +
    phi). In unit-charge dimensionless units the Coulomb interaction shifts
    the breathing eigenvalue by -2 / d_gap^3; the eigenvectors are the
    fixed coupling rows.
    """
    if d_gap <= 0.0:
        raise InvalidSequence(f"ion spacing must be positive, got {d_gap}")
    w2 = (0.5 * p.rf_ratio) ** 2
    lam_cm = (w2 * p.a, -2.0 * w2 * p.q)
    lam_br = (w2 * p.a - 2.0 / d_gap**3, -2.0 * w2 * p.q)
    eigvecs = (CM_COUPLINGS, BR_COUPLINGS)
    return lam_cm, lam_br, eigvecs


def mean_occupation(omega: float, temperature: float) -> float:
    """Bose-Einstein occupation 1/(exp(omega/T) - 1) in matched units."""
    if omega <= 0.0:
        raise ValueError("omega must be positive")
    if temperature < 0.0:
        raise ValueError("temperature must be nonnegative")
    if temperature == 0.0:
        return 0.0
    ratio = omega / temperature
    if ratio > 700.0:
        return 0.0
    return 1.0 / math.expm1(ratio)
