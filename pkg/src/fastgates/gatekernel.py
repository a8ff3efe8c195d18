"""Closed-form evaluation of SDK gate sequences.

A gate is a train of state-dependent momentum kicks on the two radial
modes. Its quality is summarized by the two-qubit entangling phase Theta,
the residual per-mode phase-space displacements (dX, dY) at the gate time,
and the state-averaged infidelity. All three have closed forms in the
Floquet mode functions, evaluated here without any ODE integration; the
oracle module re-derives the same numbers by brute force.

Conventions fixed by oracle arbitration (see the test suite):
  - the entangling-phase double sum runs over all ordered pairs m < n;
  - dY pairs cos(omega dt) with kappa_c and sin(omega dt) with kappa_s;
  - the normalizer dividing kick responses is the time-independent
    Wronskian constant of the mode function, not its periodic envelope
    diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import floquet, kernels
from .errors import InvalidSequence
from .trap import ModeSpec, TrapConfig

QUARTER_PI = 0.25 * math.pi
_SPACING_SLACK = 1e-12


@dataclass(frozen=True)
class KickSequence:
    """Ordered SDK groups with a gate time and a spacing constraint.

    kicks is a tuple of (time, multiplicity) with strictly increasing times
    and signed nonzero integer multiplicities. rep_rate is the pulse
    repetition rate in units of omega_0 / (2 pi); None means unconstrained
    spacing, and a group with |z| = k then acts as one kick of weight k.
    Under a finite rep_rate each group expands into |z| unit kicks spaced
    exactly 1/f_rep = 2 pi / rep_rate.
    """

    kicks: tuple[tuple[float, int], ...]
    gate_time: float
    rep_rate: float | None = None

    def __post_init__(self):
        kicks = tuple((float(t), int(z)) for t, z in self.kicks)
        object.__setattr__(self, "kicks", kicks)
        rep = self.rep_rate
        if rep is not None:
            rep = float(rep)
            if math.isinf(rep):
                rep = None
            elif rep <= 0.0:
                raise InvalidSequence(f"rep_rate must be positive, got {rep}")
        object.__setattr__(self, "rep_rate", rep)
        if self.gate_time <= 0.0:
            raise InvalidSequence(f"gate_time must be positive, got {self.gate_time}")
        for (t1, z1), (t2, _) in zip(kicks, kicks[1:]):
            if not t2 > t1:
                raise InvalidSequence(f"kick times not strictly increasing at t={t2}")
        for t, z in kicks:
            if z == 0:
                raise InvalidSequence(f"zero multiplicity group at t={t}")
            if t < 0.0:
                raise InvalidSequence(f"negative kick time t={t}")
        times, _ = self.expand()
        if times.size:
            if times[-1] > self.gate_time:
                raise InvalidSequence(
                    f"last kick at t={times[-1]} exceeds gate_time={self.gate_time}"
                )
            if self.rep_rate is not None:
                tau = 2.0 * math.pi / self.rep_rate
                if times.size > 1 and np.min(np.diff(times)) < tau - _SPACING_SLACK:
                    raise InvalidSequence(
                        f"unit kicks closer than 1/f_rep={tau} after expansion"
                    )

    @property
    def n_sdk(self) -> int:
        return sum(abs(z) for _, z in self.kicks)

    def expand(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit-kick times and signed weights seen by the evaluators.

        Infinite rep rate: one entry per group, weight z. Finite rep rate:
        |z| entries per group spaced 2 pi / rep_rate, weight sign(z).
        """
        if not self.kicks:
            return np.empty(0), np.empty(0)
        if self.rep_rate is None:
            t = np.array([t for t, _ in self.kicks])
            w = np.array([float(z) for _, z in self.kicks])
            return t, w
        tau = 2.0 * math.pi / self.rep_rate
        times = []
        weights = []
        for t, z in self.kicks:
            s = 1.0 if z > 0 else -1.0
            for j in range(abs(z)):
                times.append(t + j * tau)
                weights.append(s)
        return np.array(times), np.array(weights)


@dataclass(frozen=True)
class ThermalState:
    """Mean phonon occupations of the two modes."""

    nbar_cm: float = 0.0
    nbar_br: float = 0.0

    def __post_init__(self):
        if self.nbar_cm < 0.0 or self.nbar_br < 0.0:
            raise ValueError("occupations must be nonnegative")

    def nbar(self, label: str) -> float:
        return self.nbar_cm if label == "CM" else self.nbar_br


@dataclass(frozen=True)
class GateMetrics:
    """Evaluation summary of one sequence against one trap."""

    theta: float
    phase_error: float
    displacements: tuple[tuple[float, float], ...]
    infidelity: float
    n_sdk: float


def mu_tensors(mode: ModeSpec, trap: TrapConfig, t: float, t_prime: float):
    """Micromotion position tensors (mu_c, mu_s) between two times.

    mu_c = f_c(t) f_c(t') + f_s(t) f_s(t'), symmetric;
    mu_s = f_c(t') f_s(t) - f_c(t) f_s(t'), antisymmetric.
    Both reduce to (1, 0) in the secular limit q -> 0.
    """
    p = trap.mathieu_params(mode)
    fc1, fs1, _, _ = floquet.envelope_functions(mode.floquet, p, t)
    fc2, fs2, _, _ = floquet.envelope_functions(mode.floquet, p, t_prime)
    mu_c = fc1 * fc2 + fs1 * fs2
    mu_s = fc2 * fs1 - fc1 * fs2
    return mu_c, mu_s


def kappa_tensors(mode: ModeSpec, trap: TrapConfig, t: float, t_prime: float):
    """Micromotion momentum tensors (kappa_c, kappa_s) between two times.

    kappa_s = (d mu_c / dt) / omega - mu_s and
    kappa_c = (d mu_s / dt) / omega + mu_c, with the derivative taken in
    the first argument and computed analytically from the envelope series.
    """
    p = trap.mathieu_params(mode)
    fc1, fs1, dfc1, dfs1 = floquet.envelope_functions(mode.floquet, p, t)
    fc2, fs2, _, _ = floquet.envelope_functions(mode.floquet, p, t_prime)
    w = mode.omega
    mu_c = fc1 * fc2 + fs1 * fs2
    mu_s = fc2 * fs1 - fc1 * fs2
    dmu_c = dfc1 * fc2 + dfs1 * fs2
    dmu_s = fc2 * dfs1 - dfc1 * fs2
    kappa_s = dmu_c / w - mu_s
    kappa_c = dmu_s / w + mu_c
    return kappa_c, kappa_s


def _mode_kick_tables(trap: TrapConfig, mode: ModeSpec, times: np.ndarray):
    """Mode-function quadrature components at the kick times.

    Returns (p, q, dp, dq) with p = Re u, q = Im u and their time
    derivatives, built from the envelope series.
    """
    sol = mode.floquet
    fc, fs, dfc, dfs = kernels.envelope_series(
        sol.cs, sol.n_min_index, trap.rf_ratio, trap.rf_phase, times
    )
    w = mode.omega
    c = np.cos(w * times)
    s = np.sin(w * times)
    p = c * fc - s * fs
    q = s * fc + c * fs
    dp = c * dfc - s * dfs - w * q
    dq = s * dfc + c * dfs + w * p
    return p, q, dp, dq


def evaluate_kicks(
    times: np.ndarray,
    weights: np.ndarray,
    gate_time: float,
    trap: TrapConfig,
    thermal: ThermalState,
) -> GateMetrics:
    """Metrics for an already-expanded train of weighted unit kicks.

    The workhorse behind evaluate(); also called directly by the optimizer
    and the noise ensembles on kick trains that need not satisfy the
    KickSequence spacing invariants (corrupted sequences, relaxed weights).
    """
    times = np.asarray(times, dtype=float)
    weights = np.asarray(weights, dtype=float)
    theta = 0.0
    disps = []
    for mode in trap.modes:
        w = mode.omega
        rho_star = floquet.wronskian_rho(mode.floquet)
        b_a, b_b = mode.couplings
        if times.size:
            p, q, dp, dq = _mode_kick_tables(trap, mode, times)
            pg, qg, dpg, dqg = (
                float(v[0]) for v in _mode_kick_tables(trap, mode, np.array([gate_time]))
            )
            pair = kernels.pair_sum(weights, p, q)
            sum_p = float(np.dot(weights, p))
            sum_q = float(np.dot(weights, q))
        else:
            pair = sum_p = sum_q = 0.0
            pg = qg = dpg = dqg = 0.0
        eta = mode.eta_mode
        theta += (8.0 * eta * eta * b_a * b_b / rho_star) * pair
        scale = math.sqrt(2.0) * eta / rho_star
        dx = scale * (qg * sum_p - pg * sum_q)
        dy = (scale / w) * (dqg * sum_p - dpg * sum_q)
        disps.append((dx, dy))
    phase_error = abs(theta) - QUARTER_PI
    infid = infidelity(phase_error, disps, trap, thermal)
    return GateMetrics(
        theta=theta,
        phase_error=phase_error,
        displacements=tuple(disps),
        infidelity=infid,
        n_sdk=float(np.sum(np.abs(weights))),
    )


def entangling_phase(seq: KickSequence, trap: TrapConfig) -> float:
    """Two-qubit entangling phase Theta of a sequence.

    Double sum over all ordered pairs of expanded unit kicks, per mode:
    8 eta^2 b_A b_B / rho_star times sum_{n > m} w_n w_m
    [Re u(t_m) Im u(t_n) - Re u(t_n) Im u(t_m)], summed over modes.
    """
    times, weights = seq.expand()
    theta = 0.0
    for mode in trap.modes:
        rho_star = floquet.wronskian_rho(mode.floquet)
        b_a, b_b = mode.couplings
        if times.size:
            p, q, _, _ = _mode_kick_tables(trap, mode, times)
            pair = kernels.pair_sum(weights, p, q)
        else:
            pair = 0.0
        eta = mode.eta_mode
        theta += (8.0 * eta * eta * b_a * b_b / rho_star) * pair
    return theta


def residual_displacement(
    seq: KickSequence, trap: TrapConfig, mode: ModeSpec
) -> tuple[float, float]:
    """Residual phase-space displacement (dX, dY) of one mode at gate time."""
    times, weights = seq.expand()
    if not times.size:
        return 0.0, 0.0
    w = mode.omega
    rho_star = floquet.wronskian_rho(mode.floquet)
    p, q, _, _ = _mode_kick_tables(trap, mode, times)
    pg, qg, dpg, dqg = (
        float(v[0]) for v in _mode_kick_tables(trap, mode, np.array([seq.gate_time]))
    )
    sum_p = float(np.dot(weights, p))
    sum_q = float(np.dot(weights, q))
    scale = math.sqrt(2.0) * mode.eta_mode / rho_star
    dx = scale * (qg * sum_p - pg * sum_q)
    dy = (scale / w) * (dqg * sum_p - dpg * sum_q)
    return dx, dy


def infidelity(
    phase_error: float,
    displacements,
    trap: TrapConfig,
    thermal: ThermalState,
) -> float:
    """State-averaged infidelity from phase error and displacements.

    1 - F = (2/3) dPhi^2 + (4/3) sum_alpha (1/2 + nbar_alpha)
            ((b_A)^2 + (b_B)^2) (dX^2 + dY^2);
    for the two-ion couplings the coupling bracket is exactly 1.
    """
    total = (2.0 / 3.0) * phase_error * phase_error
    for mode, (dx, dy) in zip(trap.modes, displacements):
        b_a, b_b = mode.couplings
        bracket = b_a * b_a + b_b * b_b
        nbar = thermal.nbar(mode.label)
        total += (4.0 / 3.0) * (0.5 + nbar) * bracket * (dx * dx + dy * dy)
    return total


def evaluate(seq: KickSequence, trap: TrapConfig, thermal: ThermalState) -> GateMetrics:
    """Full analytic metrics bundle for a sequence."""
    times, weights = seq.expand()
    m = evaluate_kicks(times, weights, seq.gate_time, trap, thermal)
    return GateMetrics(
        theta=m.theta,
        phase_error=m.phase_error,
        displacements=m.displacements,
        infidelity=m.infidelity,
        n_sdk=seq.n_sdk,
    )
