"""Independent verification of gate phases and displacements by direct ODE integration.

Everything in :mod:`fastgates.gatekernel` is closed-form algebra on Floquet mode
functions.  This module re-derives the same quantities from scratch: it integrates
the classical phase-space trajectory of each normal mode through the kick train
with an adaptive Runge-Kutta method, accumulates the action phase along the way,
and reads the entangling phase and residual displacements off the trajectories.
The two implementations share no code beyond the trap calibration, so agreement
between them is a meaningful check.

Conventions
-----------
Each spin branch drives a single mode: the center-of-mass mode couples to the
aligned branches and the breathing mode to the anti-aligned ones.  A kick of
weight ``w`` displaces the driven mode's momentum quadrature by
``dY = 2^{3/2} w eta_mode s`` where ``s`` is the branch sign.  The per-branch
gate phase is the displacement-composition phase

    phi = (1/2) sum_j X(t_j) dY_j

over the kicked trajectory, which is obtained here without analytic shortcuts
from the on-shell identity

    phi = [X Xdot / (2 omega)] at the endpoints  -  integral of L dt,

applied to the kicked run and, subtracted, to a concrete no-kick reference run
from the same initial conditions.  The Lagrangian integral itself is computed by
two routes, direct quadrature (an extra ODE component) and the piecewise
boundary formula, and the result is rejected if they disagree: on shell the two
are identical, so a gap means the integration cannot be trusted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import IntegratorFailure, RouteMismatch
from .gatekernel import GateMetrics, KickSequence, ThermalState, infidelity
from .trap import ModeSpec, TrapConfig

KICK_SCALE = 2.0 * math.sqrt(2.0)
QUARTER_PI = 0.25 * math.pi

# Spin branch -> (driven mode, branch sign). The other mode is dark.
BRANCHES = {
    "uu": ("CM", +1),
    "dd": ("CM", -1),
    "du": ("BR", +1),
    "ud": ("BR", -1),
}


@dataclass(frozen=True, eq=False)
class BranchRun:
    """One mode integrated through the kick train with one branch sign.

    phase_quadrature and phase_boundary are the same Lagrangian integral over
    [0, gate_time] computed two ways; endpoint_term is [X Xdot/(2 omega)]
    between the initial pre-kick and final post-kick states; phase_kicks is the
    directly accumulated kick sum (1/2) sum_j X(t_j) dY_j. Sampled X and Y, when
    requested, use the pre-kick state at sample times that coincide with kicks.
    """

    mode_label: str
    sign: int
    x_end: float
    y_end: float
    phase_quadrature: float
    phase_boundary: float
    phase_kicks: float
    endpoint_term: float
    kick_times: np.ndarray
    kick_x: np.ndarray
    jumps: np.ndarray
    nfev: int
    sample_x: np.ndarray | None = None
    sample_y: np.ndarray | None = None

    @property
    def route_residual(self) -> float:
        """Disagreement between the two integral routes; an error estimate."""
        return abs(self.phase_quadrature - self.phase_boundary)

    def running_phase(self, t: np.ndarray) -> np.ndarray:
        """Kick-sum phase accumulated up to each time (a staircase)."""
        steps = np.concatenate(([0.0], np.cumsum(0.5 * self.kick_x * self.jumps)))
        idx = np.searchsorted(self.kick_times, np.asarray(t, dtype=float), side="right")
        return steps[idx]


@dataclass(frozen=True, eq=False)
class FreeRun:
    """No-kick reference trajectory from the same initial conditions."""

    mode_label: str
    x_end: float
    y_end: float
    phase_quadrature: float
    phase_boundary: float
    endpoint_term: float
    nfev: int
    sample_x: np.ndarray | None = None
    sample_y: np.ndarray | None = None

    @property
    def route_residual(self) -> float:
        return abs(self.phase_quadrature - self.phase_boundary)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Branch and reference runs of one kick sequence through one trap."""

    gate_time: float
    ode_tol: float
    mirrored: bool
    branches: dict[tuple[str, int], BranchRun]
    free: dict[str, FreeRun]
    sample_times: np.ndarray | None = None

    def branch(self, mode_label: str, sign: int) -> BranchRun:
        """The run driving `mode_label` with branch sign `sign`.

        With zero initial offsets the two signs mirror each other exactly
        ((X, Y) -> (-X, -Y), identical phase), so only +1 is integrated and
        it answers for both; the -1 trajectory samples then carry the wrong
        overall sign but every derived scalar is unaffected.
        """
        key = (mode_label, sign)
        if key not in self.branches and self.mirrored:
            key = (mode_label, +1)
        return self.branches[key]

    @property
    def nfev(self) -> int:
        runs = list(self.branches.values()) + list(self.free.values())
        return sum(r.nfev for r in runs)


def _stiffness(mode: ModeSpec, trap: TrapConfig, t):
    """Instantaneous spring constant of the mode's Mathieu oscillator."""
    w = 0.5 * trap.rf_ratio
    return w * w * (mode.a - 2.0 * trap.q_x * np.cos(trap.rf_ratio * t + trap.rf_phase))


def _run_mode(
    trap: TrapConfig,
    mode: ModeSpec,
    sign: int,
    times: np.ndarray,
    weights: np.ndarray,
    gate_time: float,
    x0: float,
    y0: float,
    ode_tol: float,
    sample_times: np.ndarray | None,
) -> BranchRun:
    """Integrate one mode through the kick train, accumulating all phases.

    State is (X, V, S) with V = dX/dt and dS/dt = (V^2 - lambda X^2)/(2 omega).
    Momentum jumps are applied exactly at kick times by splitting the
    integration there; a kick at t = 0 is applied to the initial state and one
    at t = gate_time after the final segment.
    """
    omega = mode.omega
    jumps = KICK_SCALE * mode.eta_mode * weights * sign

    def rhs(t, state):
        lam = _stiffness(mode, trap, t)
        x, v = state[0], state[1]
        return (v, -lam * x, (v * v - lam * x * x) / (2.0 * omega))

    max_step = (2.0 * math.pi / trap.rf_ratio) / 50.0
    v0 = omega * float(y0)
    x, v, s = float(x0), v0, 0.0
    boundary_sum = 0.0
    kick_phase = 0.0
    kick_x = np.empty(len(times))
    nfev = 0

    want = sample_times is not None
    if want:
        sample_x = np.full(len(sample_times), np.nan)
        sample_y = np.full(len(sample_times), np.nan)
        head = sample_times <= 0.0
        sample_x[head] = x
        sample_y[head] = v / omega

    eps = 1e-12 * max(1.0, gate_time)
    at_start = times <= eps
    at_end = times >= gate_time - eps
    interior = ~(at_start | at_end)

    for j in np.nonzero(at_start)[0]:
        kick_x[j] = x
        kick_phase += 0.5 * x * jumps[j]
        v += omega * jumps[j]

    interior_idx = np.nonzero(interior)[0]
    edges = np.concatenate(([0.0], times[interior], [gate_time]))
    for seg in range(len(edges) - 1):
        a, b = edges[seg], edges[seg + 1]
        inside = None
        t_eval = np.array([b])
        if want:
            mask = (sample_times > a) & (sample_times <= b)
            inside = sample_times[mask]
            t_eval = np.unique(np.append(inside, b))
        res = solve_ivp(
            rhs,
            (a, b),
            (x, v, s),
            method="DOP853",
            t_eval=t_eval,
            rtol=ode_tol,
            atol=ode_tol * 1e-2,
            max_step=max_step,
        )
        if not res.success:
            raise IntegratorFailure(
                f"mode {mode.label} segment [{a:g}, {b:g}]: {res.message}"
            )
        nfev += res.nfev
        if want and inside.size:
            pos = np.searchsorted(res.t, inside)
            sample_x[np.nonzero(mask)[0]] = res.y[0][pos]
            sample_y[np.nonzero(mask)[0]] = res.y[1][pos] / omega
        x_new, v_new, s_new = res.y[0][-1], res.y[1][-1], res.y[2][-1]
        boundary_sum += (x_new * v_new - x * v) / (2.0 * omega)
        x, v, s = x_new, v_new, s_new
        if seg < len(edges) - 2:
            j = interior_idx[seg]
            kick_x[j] = x
            kick_phase += 0.5 * x * jumps[j]
            v += omega * jumps[j]

    for j in np.nonzero(at_end)[0]:
        kick_x[j] = x
        kick_phase += 0.5 * x * jumps[j]
        v += omega * jumps[j]

    return BranchRun(
        mode_label=mode.label,
        sign=sign,
        x_end=x,
        y_end=v / omega,
        phase_quadrature=s,
        phase_boundary=boundary_sum,
        phase_kicks=kick_phase,
        endpoint_term=(x * v - float(x0) * v0) / (2.0 * omega),
        kick_times=np.asarray(times, dtype=float).copy(),
        kick_x=kick_x,
        jumps=jumps,
        nfev=nfev,
        sample_x=sample_x if want else None,
        sample_y=sample_y if want else None,
    )


def integrate(
    seq: KickSequence,
    trap: TrapConfig,
    initial: dict[str, tuple[float, float]] | None = None,
    ode_tol: float = 1e-12,
    sample_times: np.ndarray | None = None,
    both_signs: bool = False,
) -> Trajectory:
    """Integrate every spin branch of a kick sequence through the trap.

    `initial` maps mode labels to common (X0, Y0) phase-space offsets at t = 0;
    omitted modes start at the origin.  With zero offsets the two signs of a
    mode mirror each other exactly, so only +1 is integrated unless
    `both_signs` forces both.  `sample_times`, if given, must be an ascending
    grid within [0, gate_time]; sampled (X, Y) are attached to every run.
    """
    if ode_tol <= 0.0:
        raise ValueError(f"ode_tol must be positive, got {ode_tol}")
    times, weights = seq.expand()
    offsets = {m.label: (0.0, 0.0) for m in trap.modes}
    if initial:
        for label, xy in initial.items():
            offsets[label] = (float(xy[0]), float(xy[1]))
    mirrored = all(x == 0.0 and y == 0.0 for x, y in offsets.values())
    signs = (+1,) if mirrored and not both_signs else (+1, -1)

    if sample_times is not None:
        sample_times = np.asarray(sample_times, dtype=float)

    branches: dict[tuple[str, int], BranchRun] = {}
    free: dict[str, FreeRun] = {}
    no_kicks = np.empty(0)
    for mode in trap.modes:
        x0, y0 = offsets[mode.label]
        for sign in signs:
            branches[(mode.label, sign)] = _run_mode(
                trap, mode, sign, times, weights, seq.gate_time,
                x0, y0, ode_tol, sample_times,
            )
        ref = _run_mode(
            trap, mode, +1, no_kicks, no_kicks, seq.gate_time,
            x0, y0, ode_tol, sample_times,
        )
        free[mode.label] = FreeRun(
            mode_label=mode.label,
            x_end=ref.x_end,
            y_end=ref.y_end,
            phase_quadrature=ref.phase_quadrature,
            phase_boundary=ref.phase_boundary,
            endpoint_term=ref.endpoint_term,
            nfev=ref.nfev,
            sample_x=ref.sample_x,
            sample_y=ref.sample_y,
        )

    return Trajectory(
        gate_time=seq.gate_time,
        ode_tol=ode_tol,
        mirrored=mirrored,
        branches=branches,
        free=free,
        sample_times=sample_times,
    )


def action_phase(
    traj: Trajectory, trap: TrapConfig, route_tol: float = 1e-8
) -> tuple[dict[str, float], float]:
    """Per-branch gate phases and the combined entangling phase.

    Each branch phase is the endpoint-reduced action of the kicked run minus
    that of the no-kick reference run, evaluated once with the quadrature
    integral and once with the boundary-formula integral.  The two routes must
    agree to `route_tol`, and both must agree with the directly accumulated
    kick sum, or the integration is rejected.
    """
    reduced: dict[tuple[str, int], float] = {}
    for key, run in traj.branches.items():
        ref = traj.free[run.mode_label]
        quad_route = (run.endpoint_term - run.phase_quadrature) - (
            ref.endpoint_term - ref.phase_quadrature
        )
        bnd_route = (run.endpoint_term - run.phase_boundary) - (
            ref.endpoint_term - ref.phase_boundary
        )
        if abs(quad_route - bnd_route) > route_tol:
            raise RouteMismatch(
                f"branch {key}: quadrature route {quad_route:.15g} vs "
                f"boundary route {bnd_route:.15g}"
            )
        if abs(quad_route - run.phase_kicks) > route_tol * max(
            1.0, abs(run.phase_kicks)
        ):
            raise RouteMismatch(
                f"branch {key}: reduced action {quad_route:.15g} vs "
                f"kick sum {run.phase_kicks:.15g}"
            )
        reduced[key] = quad_route

    def branch_phase(label: str, sign: int) -> float:
        if (label, sign) not in reduced and traj.mirrored:
            sign = +1
        return reduced[(label, sign)]

    phases = {
        name: branch_phase(label, sign) for name, (label, sign) in BRANCHES.items()
    }
    theta = 0.5 * (phases["uu"] + phases["dd"] - phases["du"] - phases["ud"])
    return phases, theta


def oracle_metrics(
    seq: KickSequence,
    trap: TrapConfig,
    thermal: ThermalState,
    ode_tol: float = 1e-12,
    initial: dict[str, tuple[float, float]] | None = None,
    route_tol: float = 1e-8,
) -> GateMetrics:
    """Gate metrics from trajectory integration alone.

    Returns the same structure as :func:`fastgates.gatekernel.evaluate` so the
    two can be compared field by field.  Residual displacements are read off
    the +1 branch at gate time, relative to the free reference, with the
    branch eigenvalue divided out.
    """
    traj = integrate(seq, trap, initial=initial, ode_tol=ode_tol)
    _, theta = action_phase(traj, trap, route_tol=route_tol)

    disps = []
    for mode in trap.modes:
        run = traj.branch(mode.label, +1)
        ref = traj.free[mode.label]
        disps.append(
            (0.5 * (run.x_end - ref.x_end), 0.5 * (run.y_end - ref.y_end))
        )
    displacements = tuple(disps)

    phase_error = abs(theta) - QUARTER_PI
    return GateMetrics(
        theta=theta,
        phase_error=phase_error,
        displacements=displacements,
        infidelity=infidelity(phase_error, displacements, trap, thermal),
        n_sdk=float(seq.n_sdk),
    )
