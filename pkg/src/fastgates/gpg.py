"""Two-stage search for kick sequences implementing a maximally entangling gate.

Stage 1 works at fixed, uniformly spaced group timings: the integer kick
multiplicities are relaxed to continuous values, the infidelity is minimized by
projected Adam descent from several random starts (the cost is quadratic in the
relaxed vector, so its gradient is closed-form), and each optimum is snapped
back to integers with a greedy one-pass neighborhood search.  Stage 2 keeps the
surviving integer vectors and re-optimizes the group timings, with the
repetition-rate spacing constraint built into the parameterization so every
iterate is feasible.

Multistarts are keyed by spawned child seeds, so results are independent of
execution order and any `map_fn` (serial map, process pool) gives identical
output.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .__init__ import __version__
from .errors import InfeasibleSpacing, NoCandidates, NoSolution
from .floquet import wronskian_rho
from .gatekernel import (
    QUARTER_PI,
    GateMetrics,
    KickSequence,
    ThermalState,
    _mode_kick_tables,
    evaluate,
    evaluate_kicks,
)
from .trap import TrapConfig

BASELINE_COST = (2.0 / 3.0) * QUARTER_PI * QUARTER_PI

# Convention flags recorded in every solution's provenance.
CONVENTIONS = {
    "phase_pair_sum": "all_ordered_pairs",
    "y_envelope_pairing": "cos_with_kappa_c",
    "phase_error": "abs_theta_minus_quarter_pi",
}


@dataclass(frozen=True)
class SearchConfig:
    """Search problem definition and budgets.

    n_groups=None resolves to ceil(4 t_g rf_ratio / (2 pi)) at solve time,
    a few group slots per RF cycle. rep_rate is in units of omega_0/(2 pi)
    (None or inf means unconstrained spacing). Timings and gate_time_target
    are in units of 1/omega_0.
    """

    gate_time_target: float
    rep_rate: float | None = None
    n_groups: int | None = None
    multistarts: int = 8
    rng_seed: int = 0
    stage1_iters: int = 300
    stage2_iters: int = 400
    z_bound: int = 6
    fidelity_target: float = 0.999
    thermal: ThermalState = field(default_factory=ThermalState)
    stage1_inits: int = 8
    top_k: int = 8
    stage1_method: str = "sgd"
    stage2_method: str = "gradient"

    def __post_init__(self):
        if self.gate_time_target <= 0.0:
            raise ValueError("gate_time_target must be positive")
        rep = self.rep_rate
        if rep is not None:
            rep = float(rep)
            if math.isinf(rep):
                rep = None
            elif rep <= 0.0:
                raise ValueError("rep_rate must be positive")
            object.__setattr__(self, "rep_rate", rep)
        if self.n_groups is not None and self.n_groups < 2:
            raise ValueError("n_groups must be at least 2")
        if self.multistarts < 1 or self.stage1_inits < 1 or self.top_k < 1:
            raise ValueError("multistarts, stage1_inits and top_k must be >= 1")
        if self.stage1_iters < 1 or self.stage2_iters < 1:
            raise ValueError("iteration budgets must be >= 1")
        if self.z_bound < 1:
            raise ValueError("z_bound must be >= 1")
        if not 0.0 < self.fidelity_target < 1.0:
            raise ValueError("fidelity_target must be in (0, 1)")
        if self.stage1_method not in ("sgd", "lbfgs"):
            raise ValueError(f"unknown stage1_method {self.stage1_method!r}")
        if self.stage2_method not in ("gradient", "simplex"):
            raise ValueError(f"unknown stage2_method {self.stage2_method!r}")


@dataclass(frozen=True, eq=False)
class GateSolution:
    """One refined sequence with its exact re-derived metrics."""

    sequence: KickSequence
    metrics: GateMetrics
    trap: TrapConfig
    thermal: ThermalState
    provenance: dict

    def passes(self, fidelity_target: float) -> bool:
        return self.metrics.infidelity <= 1.0 - fidelity_target


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Best solution plus the full ranked candidate pool."""

    best: GateSolution
    solutions: tuple[GateSolution, ...]


def resolve_n_groups(cfg: SearchConfig, trap: TrapConfig) -> int:
    if cfg.n_groups is not None:
        return cfg.n_groups
    m = math.ceil(4.0 * cfg.gate_time_target * trap.rf_ratio / (2.0 * math.pi))
    return max(m, 2)


def uniform_timings(cfg: SearchConfig, trap: TrapConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.gate_time_target, resolve_n_groups(cfg, trap))


class _Stage1Cost:
    """Quadratic model of the infidelity over relaxed multiplicities.

    At fixed timings Theta = z^T G z / 2 and each displacement component is a
    dot product with z, so cost and gradient are a handful of matvecs.
    """

    def __init__(self, trap: TrapConfig, times: np.ndarray, thermal: ThermalState):
        m = len(times)
        g = np.zeros((m, m))
        self.lin: list[tuple[float, np.ndarray, np.ndarray]] = []
        for mode in trap.modes:
            rho = wronskian_rho(mode.floquet)
            b_a, b_b = mode.couplings
            eta = mode.eta_mode
            p, q, dp, dq = _mode_kick_tables(trap, mode, times)
            pg, qg, dpg, dqg = (
                float(v[0])
                for v in _mode_kick_tables(trap, mode, np.array([times[-1]]))
            )
            pair = np.outer(p, q) - np.outer(q, p)
            w = np.triu(pair, k=1)
            c = 8.0 * eta * eta * b_a * b_b / rho
            g += c * (w + w.T)
            scale = math.sqrt(2.0) * eta / rho
            u = scale * (qg * p - pg * q)
            v = (scale / mode.omega) * (dqg * p - dpg * q)
            self.lin.append((0.5 + thermal.nbar(mode.label), u, v))
        self.g = g

    def value_grad(self, z: np.ndarray) -> tuple[float, np.ndarray]:
        gz = self.g @ z
        theta = 0.5 * float(z @ gz)
        dphi = abs(theta) - QUARTER_PI
        cost = (2.0 / 3.0) * dphi * dphi
        grad = (4.0 / 3.0) * dphi * math.copysign(1.0, theta) * gz
        for nb, u, v in self.lin:
            du, dv = float(u @ z), float(v @ z)
            cost += (4.0 / 3.0) * nb * (du * du + dv * dv)
            grad += (8.0 / 3.0) * nb * (du * u + dv * v)
        return cost, grad

    def value(self, z: np.ndarray) -> float:
        theta = 0.5 * float(z @ (self.g @ z))
        dphi = abs(theta) - QUARTER_PI
        cost = (2.0 / 3.0) * dphi * dphi
        for nb, u, v in self.lin:
            du, dv = float(u @ z), float(v @ z)
            cost += (4.0 / 3.0) * nb * (du * du + dv * dv)
        return cost


def _adam_descend(
    cost: _Stage1Cost, z0: np.ndarray, bound: float, iters: int
) -> np.ndarray:
    """Projected first-order descent (Adam) of the relaxed cost."""
    z = z0.copy()
    m = np.zeros_like(z)
    v = np.zeros_like(z)
    lr, b1, b2, eps = 0.15, 0.9, 0.999, 1e-8
    for k in range(1, iters + 1):
        _, grad = cost.value_grad(z)
        m = b1 * m + (1.0 - b1) * grad
        v = b2 * v + (1.0 - b2) * grad * grad
        mh = m / (1.0 - b1**k)
        vh = v / (1.0 - b2**k)
        z -= lr * mh / (np.sqrt(vh) + eps)
        np.clip(z, -bound, bound, out=z)
    return z


def _lbfgs_descend(
    cost: _Stage1Cost, z0: np.ndarray, bound: float, iters: int
) -> np.ndarray:
    """Bounded quasi-Newton descent of the relaxed cost.

    The relaxed landscape is a curved valley where the phase condition
    meets the displacement planes; first-order descent tends to stall
    around 1e-3 there, while L-BFGS-B reaches the relaxed optimum to
    machine precision from the same starts.
    """
    res = minimize(
        cost.value_grad,
        z0,
        jac=True,
        method="L-BFGS-B",
        bounds=[(-bound, bound)] * len(z0),
        options={"maxiter": iters, "ftol": 1e-18, "gtol": 1e-14},
    )
    return res.x


def _integerize(cost: _Stage1Cost, z: np.ndarray, bound: int) -> np.ndarray:
    zi = np.clip(np.rint(z), -bound, bound).astype(int)
    best = cost.value(zi.astype(float))
    for j in range(len(zi)):
        for step in (1, -1):
            trial = zi[j] + step
            if abs(trial) > bound:
                continue
            old = zi[j]
            zi[j] = trial
            c = cost.value(zi.astype(float))
            if c < best:
                best = c
            else:
                zi[j] = old
    return zi


def stage1_search(
    trap: TrapConfig, cfg: SearchConfig, rng: np.random.Generator | None = None
) -> list[np.ndarray]:
    """Integer multiplicity candidates at uniform timings, best first.

    Raises NoCandidates when nothing beats the no-gate baseline cost.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    times = uniform_timings(cfg, trap)
    cost = _Stage1Cost(trap, times, cfg.thermal)
    seen: dict[tuple, float] = {}
    descend = _adam_descend if cfg.stage1_method == "sgd" else _lbfgs_descend
    for _ in range(cfg.stage1_inits):
        z0 = rng.uniform(-2.0, 2.0, len(times))
        z = descend(cost, z0, float(cfg.z_bound), cfg.stage1_iters)
        zi = _integerize(cost, z, cfg.z_bound)
        if not np.any(zi):
            continue
        key = tuple(int(x) for x in zi)
        if key not in seen:
            seen[key] = cost.value(zi.astype(float))
    ranked = sorted(seen.items(), key=lambda kv: (kv[1], kv[0]))
    ranked = [(k, c) for k, c in ranked if c < BASELINE_COST]
    if not ranked:
        raise NoCandidates(
            f"no integer vector beat the baseline cost {BASELINE_COST:.4f}"
        )
    return [np.array(k, dtype=int) for k, _ in ranked[: cfg.top_k]]


def _group_layout(z: np.ndarray, t_init: np.ndarray, gate_time: float, tau: float):
    """Nonzero groups, their expanded-unit spans, and the free gap budget."""
    idx = np.nonzero(z)[0]
    zs = z[idx].astype(int)
    starts = t_init[idx]
    spans = (np.abs(zs) - 1) * tau
    budget = gate_time - tau * (np.sum(np.abs(zs)) - 1) if len(zs) else gate_time
    return zs, starts, spans, budget


def _times_from_gaps(gaps: np.ndarray, zs: np.ndarray, tau: float):
    """Group start times from the gap vector (one gap before each group)."""
    occupied = np.abs(zs) * tau
    starts = np.cumsum(gaps[:-1]) + np.concatenate(([0.0], np.cumsum(occupied[:-1])))
    return starts


def _expand_groups(starts: np.ndarray, zs: np.ndarray, tau: float):
    if tau == 0.0:
        return starts.copy(), zs.astype(float), np.arange(len(zs))
    times = []
    weights = []
    owner = []
    for k, (s, z) in enumerate(zip(starts, zs)):
        sign = 1.0 if z > 0 else -1.0
        for j in range(abs(z)):
            times.append(s + j * tau)
            weights.append(sign)
            owner.append(k)
    return np.array(times), np.array(weights), np.array(owner)


class _Stage2Cost:
    """Infidelity as a function of softmax-parameterized group gaps.

    Feasibility (ordering, minimum spacing, containment in [0, t_g]) holds for
    every parameter value by construction. Tracks the best point seen so the
    refinement can never end worse than its start.
    """

    def __init__(
        self,
        trap: TrapConfig,
        zs: np.ndarray,
        budget: float,
        tau: float,
        gate_time: float,
        thermal: ThermalState,
    ):
        self.trap = trap
        self.zs = zs
        self.budget = budget
        self.tau = tau
        self.gate_time = gate_time
        self.thermal = thermal
        self.tables: list[tuple] = []
        for mode in trap.modes:
            rho = wronskian_rho(mode.floquet)
            pg, qg, dpg, dqg = (
                float(v[0])
                for v in _mode_kick_tables(trap, mode, np.array([gate_time]))
            )
            self.tables.append((mode, rho, pg, qg, dpg, dqg))
        self.best_cost = math.inf
        self.best_r = None

    def _gaps(self, r: np.ndarray) -> np.ndarray:
        e = np.exp(r - np.max(r))
        return self.budget * e / np.sum(e)


def _stage2_cost_grad(state: _Stage2Cost, r: np.ndarray) -> tuple[float, np.ndarray]:
    gaps = state._gaps(r)
    starts = _times_from_gaps(gaps, state.zs, state.tau)
    times, weights, owner = _expand_groups(starts, state.zs, state.tau)
    theta = 0.0
    theta_grad = np.zeros(len(times))
    disp_terms = []
    for mode, rho, pg, qg, dpg, dqg in state.tables:
        eta = mode.eta_mode
        b_a, b_b = mode.couplings
        p, q, dp, dq = _mode_kick_tables(state.trap, mode, times)
        pair, pair_grad = kernels.pair_sum_grad(weights, p, q, dp, dq)
        c_th = 8.0 * eta * eta * b_a * b_b / rho
        theta += c_th * pair
        theta_grad += c_th * pair_grad
        scale = math.sqrt(2.0) * eta / rho
        dx = scale * (qg * float(weights @ p) - pg * float(weights @ q))
        dy = (scale / mode.omega) * (
            dqg * float(weights @ p) - dpg * float(weights @ q)
        )
        dx_dt = scale * weights * (qg * dp - pg * dq)
        dy_dt = (scale / mode.omega) * weights * (dqg * dp - dpg * dq)
        disp_terms.append((0.5 + state.thermal.nbar(mode.label), dx, dy, dx_dt, dy_dt))

    dphi = abs(theta) - QUARTER_PI
    cost = (2.0 / 3.0) * dphi * dphi
    dc_dt = (4.0 / 3.0) * dphi * math.copysign(1.0, theta) * theta_grad
    for nb, dx, dy, dx_dt, dy_dt in disp_terms:
        cost += (4.0 / 3.0) * nb * (dx * dx + dy * dy)
        dc_dt += (8.0 / 3.0) * nb * (dx * dx_dt + dy * dy_dt)

    # chain rule: unit-kick grads -> group grads -> gap grads -> softmax logits
    k_groups = len(state.zs)
    dc_ds = np.zeros(k_groups)
    np.add.at(dc_ds, owner, dc_dt)
    dc_dgap = np.concatenate((np.cumsum(dc_ds[::-1])[::-1], [0.0]))
    sigma = gaps / state.budget
    inner = dc_dgap * sigma
    dc_dr = state.budget * (inner - sigma * np.sum(inner))

    if cost < state.best_cost:
        state.best_cost = cost
        state.best_r = r.copy()
    return cost, dc_dr


def _stage2_cost(state: _Stage2Cost, r: np.ndarray) -> float:
    """Value-only twin of _stage2_cost_grad for derivative-free descent."""
    gaps = state._gaps(r)
    starts = _times_from_gaps(gaps, state.zs, state.tau)
    times, weights, _ = _expand_groups(starts, state.zs, state.tau)
    theta = 0.0
    cost = 0.0
    for mode, rho, pg, qg, dpg, dqg in state.tables:
        eta = mode.eta_mode
        b_a, b_b = mode.couplings
        p, q, _, _ = _mode_kick_tables(state.trap, mode, times)
        theta += (8.0 * eta * eta * b_a * b_b / rho) * kernels.pair_sum(
            weights, p, q
        )
        scale = math.sqrt(2.0) * eta / rho
        dx = scale * (qg * float(weights @ p) - pg * float(weights @ q))
        dy = (scale / mode.omega) * (
            dqg * float(weights @ p) - dpg * float(weights @ q)
        )
        nb = 0.5 + state.thermal.nbar(mode.label)
        cost += (4.0 / 3.0) * nb * (dx * dx + dy * dy)
    dphi = abs(theta) - QUARTER_PI
    cost += (2.0 / 3.0) * dphi * dphi
    if cost < state.best_cost:
        state.best_cost = cost
        state.best_r = r.copy()
    return cost


def _initial_logits(
    starts_init: np.ndarray, zs: np.ndarray, tau: float, gate_time: float, budget: float
) -> np.ndarray:
    occupied = np.abs(zs) * tau
    gaps = np.empty(len(zs) + 1)
    gaps[0] = starts_init[0]
    gaps[1:-1] = np.diff(starts_init) - occupied[:-1]
    gaps[-1] = gate_time - (starts_init[-1] + occupied[-1] - tau)
    gaps = np.maximum(gaps, 1e-9 * max(1.0, gate_time))
    gaps *= budget / np.sum(gaps)
    return np.clip(np.log(gaps / budget), -60.0, 60.0)


def stage2_refine(
    trap: TrapConfig,
    z: np.ndarray,
    t_init: np.ndarray,
    cfg: SearchConfig,
    tags: dict | None = None,
) -> GateSolution:
    """Refine group timings for a fixed integer multiplicity vector.

    Gaps between groups are optimized through a softmax map onto the free time
    budget, so order, spacing and containment are unconditionally satisfied.
    The returned solution is the best point ever visited, re-evaluated through
    the exact sequence pipeline.
    """
    z = np.asarray(z, dtype=int)
    t_init = np.asarray(t_init, dtype=float)
    tau = 0.0 if cfg.rep_rate is None else 2.0 * math.pi / cfg.rep_rate
    gate_time = cfg.gate_time_target
    zs, starts_init, _, budget = _group_layout(z, t_init, gate_time, tau)
    if len(zs) == 0:
        raise NoCandidates("all-zero multiplicity vector")
    if budget < 0.0:
        n_units = int(np.sum(np.abs(zs)))
        raise InfeasibleSpacing(
            f"{n_units} unit kicks at spacing {tau:g} do not fit in {gate_time:g}"
        )

    state = _Stage2Cost(trap, zs, budget, tau, gate_time, cfg.thermal)
    r0 = _initial_logits(starts_init, zs, tau, gate_time, budget)
    _stage2_cost_grad(state, r0)

    if cfg.stage2_method == "gradient":
        minimize(
            lambda r: _stage2_cost_grad(state, r),
            r0,
            jac=True,
            method="L-BFGS-B",
            bounds=[(-60.0, 60.0)] * len(r0),
            options={"maxiter": cfg.stage2_iters, "ftol": 1e-14, "gtol": 1e-12},
        )
    else:
        minimize(
            lambda r: _stage2_cost(state, r),
            r0,
            method="Nelder-Mead",
            options={
                "maxfev": 4 * cfg.stage2_iters,
                "fatol": 1e-14,
                "xatol": 1e-10,
            },
        )

    gaps = state._gaps(state.best_r)
    starts = _times_from_gaps(gaps, state.zs, tau)
    seq = _build_sequence(starts, zs, gate_time, cfg.rep_rate)
    metrics = evaluate(seq, trap, cfg.thermal)
    provenance = {
        "seed": cfg.rng_seed,
        "stage1_iters": cfg.stage1_iters,
        "stage2_iters": cfg.stage2_iters,
        "stage1_method": cfg.stage1_method,
        "stage2_method": cfg.stage2_method,
        "version": __version__,
        "conventions": dict(CONVENTIONS),
        "wall_time_s": None,
    }
    if tags:
        provenance.update(tags)
    return GateSolution(
        sequence=seq,
        metrics=metrics,
        trap=trap,
        thermal=cfg.thermal,
        provenance=provenance,
    )


def _build_sequence(
    starts: np.ndarray, zs: np.ndarray, gate_time: float, rep_rate: float | None
) -> KickSequence:
    """Assemble a valid KickSequence, merging float-coincident groups."""
    tau = 0.0 if rep_rate is None else 2.0 * math.pi / rep_rate
    slack = 1e-9 * gate_time
    kicks: list[tuple[float, int]] = []
    for t, z in zip(starts, zs):
        t = float(min(max(t, 0.0), gate_time))
        # the gap map keeps expanded groups inside the gate up to float
        # rounding; pull an end-of-gate group back by that much, no more
        over = t + (abs(int(z)) - 1) * tau - gate_time
        if 0.0 < over <= slack:
            t -= over
            while t + (abs(int(z)) - 1) * tau > gate_time:
                t = math.nextafter(t, 0.0)
        if kicks and t <= kicks[-1][0]:
            merged = kicks[-1][1] + int(z)
            if merged == 0:
                kicks.pop()
            else:
                kicks[-1] = (kicks[-1][0], merged)
        else:
            kicks.append((t, int(z)))
    return KickSequence(kicks=tuple(kicks), gate_time=gate_time, rep_rate=rep_rate)


def _ranking_key(sol: GateSolution, fidelity_target: float):
    passed = sol.passes(fidelity_target)
    return (
        not passed,
        sol.metrics.n_sdk if passed else 0,
        sol.metrics.infidelity,
        sol.provenance.get("multistart", 0),
        sol.provenance.get("candidate", 0),
    )


def _multistart_worker(args) -> list[GateSolution]:
    trap, cfg, start_idx, child_seed = args
    rng = np.random.default_rng(child_seed)
    t_init = uniform_timings(cfg, trap)
    try:
        candidates = stage1_search(trap, cfg, rng=rng)
    except NoCandidates:
        return []
    out = []
    for ci, z in enumerate(candidates):
        try:
            sol = stage2_refine(
                trap, z, t_init, cfg, tags={"multistart": start_idx, "candidate": ci}
            )
        except InfeasibleSpacing:
            continue
        out.append(sol)
    return out


def solve_gate(
    trap: TrapConfig,
    cfg: SearchConfig,
    min_fidelity: float | None = None,
    map_fn=map,
) -> SolveResult:
    """Full two-stage search; best solution plus the ranked pool.

    Ranking: meets the fidelity target first, then fewest SDKs, then lowest
    infidelity, then multistart order. `min_fidelity`, when given, turns a
    best solution below that floor into a NoSolution error carrying the
    ranked pool for inspection. `map_fn` may be a process-pool map; results
    do not depend on scheduling.
    """
    t0 = time.perf_counter()
    children = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.multistarts)
    jobs = [(trap, cfg, k, children[k]) for k in range(cfg.multistarts)]
    pool: list[GateSolution] = []
    for sols in map_fn(_multistart_worker, jobs):
        pool.extend(sols)
    if not pool:
        raise NoSolution("no multistart produced a candidate", solutions=())
    pool.sort(key=lambda s: _ranking_key(s, cfg.fidelity_target))
    wall = time.perf_counter() - t0
    for sol in pool:
        sol.provenance["wall_time_s"] = wall
    best = pool[0]
    if min_fidelity is not None and 1.0 - best.metrics.infidelity < min_fidelity:
        raise NoSolution(
            f"best fidelity {1.0 - best.metrics.infidelity:.6f} below "
            f"floor {min_fidelity}",
            solutions=tuple(pool),
        )
    return SolveResult(best=best, solutions=tuple(pool))


@dataclass(frozen=True, eq=False)
class SweepPoint:
    """One grid point of a sweep; solution is None when the point failed."""

    axis: str
    axis_value: float
    q_x: float
    status: str
    infidelity: float
    n_sdk: float
    theta: float
    solution: GateSolution | None


def sweep(
    trap_family: list[TrapConfig],
    axis: str,
    grid,
    cfg: SearchConfig,
    map_fn=map,
) -> list[SweepPoint]:
    """Independent solve per (trap, axis value); failures become marked rows.

    axis is "gate_time" or "rep_rate"; grid values are in the same units as
    the corresponding SearchConfig field. Per-point seeds derive from the
    master seed by counter so the table is reproducible at any parallelism.
    """
    if axis not in ("gate_time", "rep_rate"):
        raise ValueError(f"unknown sweep axis {axis!r}")
    grid = [float(v) for v in grid]
    if not grid:
        raise ValueError("empty sweep grid")
    seeds = np.random.SeedSequence(cfg.rng_seed).generate_state(
        len(trap_family) * len(grid), dtype=np.uint64
    )
    points = []
    i = 0
    for trap in trap_family:
        for v in grid:
            if axis == "gate_time":
                sub = replace(cfg, gate_time_target=v, rng_seed=int(seeds[i]))
            else:
                sub = replace(cfg, rep_rate=v, rng_seed=int(seeds[i]))
            points.append((trap, sub, axis, v))
            i += 1

    rows = []
    for trap, sub, ax, v in points:
        try:
            result = solve_gate(trap, sub, map_fn=map_fn)
            best = result.best
            status = "ok" if best.passes(sub.fidelity_target) else "below_target"
            rows.append(
                SweepPoint(
                    axis=ax,
                    axis_value=v,
                    q_x=trap.q_x,
                    status=status,
                    infidelity=best.metrics.infidelity,
                    n_sdk=best.metrics.n_sdk,
                    theta=best.metrics.theta,
                    solution=best,
                )
            )
        except (NoSolution, NoCandidates, InfeasibleSpacing) as exc:
            rows.append(
                SweepPoint(
                    axis=ax,
                    axis_value=v,
                    q_x=trap.q_x,
                    status=f"failed:{type(exc).__name__}",
                    infidelity=math.nan,
                    n_sdk=0.0,
                    theta=math.nan,
                    solution=None,
                )
            )
    return rows
