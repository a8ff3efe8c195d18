"""Command-line interface.

Subcommands cover the full workflow: calibrate a trap, design a gate,
re-evaluate or independently verify a stored solution, sweep gate time or
repetition rate, run noise ensembles, dump motional trajectories, and
rasterize the stability diagram.

Units on the command line are experiment-facing: gate times in trap periods
(omega_0 t / 2pi) and repetition rates in units of omega_0 / 2pi, so
--rep-rate 800 means 2 pi f_rep = 800 omega_0.  Internally everything is in
trap units with omega_CM = 1.

Exit codes: 0 success, 2 bad configuration or arguments, 3 numerical
failure, 4 no solution above the requested fidelity floor.  This module is
the only place worker pools are spawned; --threads > 1 parallelizes
multistarts and noise ensembles without changing any output byte.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, gpg, noise, oracle, persist
from .errors import (
    ConfigError,
    DomainError,
    FastgatesError,
    InfeasibleSpacing,
    InvalidSequence,
    NoCandidates,
    NoSolution,
)
from .floquet import hill_trace
from .gatekernel import ThermalState
from .trap import calibrate

TWO_PI = 2.0 * math.pi


def _default_threads() -> int:
    env = os.environ.get("FASTGATES_THREADS")
    if env is None:
        return 1
    try:
        n = int(env)
    except ValueError as exc:
        raise ConfigError(f"FASTGATES_THREADS={env!r} is not an integer") from exc
    if n < 1:
        raise ConfigError("FASTGATES_THREADS must be >= 1")
    return n


def _emit(args, text: str) -> None:
    if args.out:
        persist.atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def _trap_from_args(args):
    if args.trap is not None:
        if args.qx is not None:
            raise ConfigError("give either --trap or --qx, not both")
        return persist.load_trap_config(args.trap)
    if args.qx is None:
        raise ConfigError("a trap is required: --trap FILE or --qx VALUE")
    return calibrate(
        q_x=args.qx,
        rf_ratio=args.rf_ratio,
        chi=args.chi,
        eta=args.eta,
        rf_phase=args.rf_phase,
    )


def _thermal_from_args(args) -> ThermalState:
    return ThermalState(nbar_cm=args.nbar_cm, nbar_br=args.nbar_br)


def _search_config(args, gate_time: float, rep_rate, seed: int):
    try:
        return gpg.SearchConfig(
            gate_time_target=gate_time,
            rep_rate=rep_rate,
            n_groups=args.n_groups,
            multistarts=args.multistarts,
            rng_seed=seed,
            stage1_iters=args.stage1_iters,
            stage2_iters=args.stage2_iters,
            z_bound=args.z_bound,
            fidelity_target=args.fidelity_target,
            thermal=_thermal_from_args(args),
            stage1_inits=args.stage1_inits,
            top_k=args.top_k,
            stage1_method=args.stage1_method,
            stage2_method=args.stage2_method,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _grid(spec: str) -> list[float]:
    """start:stop:count (inclusive) or a comma-separated list."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {spec!r}: expected start:stop:count")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"grid {spec!r}: {exc}") from exc
        if n < 1:
            raise ConfigError("grid count must be >= 1")
        return list(np.linspace(lo, hi, n))
    try:
        return [float(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"grid {spec!r}: {exc}") from exc


def _qx_list(spec: str) -> list[float]:
    try:
        return [float(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"--qx {spec!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_calibrate(args) -> int:
    tol = args.tol if args.tol is not None else 1e-12
    trap = calibrate(
        q_x=args.qx,
        rf_ratio=args.rf_ratio,
        chi=args.chi,
        eta=args.eta,
        rf_phase=args.rf_phase,
        beta_tol=tol,
    )
    if args.out:
        persist.save_trap_config(args.out, trap)
    summary = {
        "q_x": trap.q_x,
        "rf_ratio": trap.rf_ratio,
        "chi": trap.chi,
        "eta": trap.eta,
        "rf_phase": trap.rf_phase,
        "modes": [
            {
                "label": m.label,
                "a": m.a,
                "beta": m.beta,
                "secular_frequency": m.omega,
                "eta_mode": m.eta_mode,
            }
            for m in trap.modes
        ],
    }
    sys.stdout.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return 0


def _map_context(threads: int):
    if threads > 1:
        return ProcessPoolExecutor(max_workers=threads)
    return None


def cmd_solve(args) -> int:
    trap = _trap_from_args(args)
    gate_time = args.gate_time * TWO_PI
    cfg = _search_config(args, gate_time, args.rep_rate, args.seed)
    pool = _map_context(args.threads)
    map_fn = pool.map if pool is not None else map
    try:
        result = gpg.solve_gate(
            trap, cfg, min_fidelity=args.fidelity_target, map_fn=map_fn
        )
        best = result.best
        floor_met = True
    except NoSolution as exc:
        if not exc.solutions:
            raise
        best = exc.solutions[0]
        floor_met = False
    finally:
        if pool is not None:
            pool.shutdown()
    if args.out:
        persist.save_solution(args.out, best)
    else:
        sys.stdout.write(
            json.dumps(persist.solution_to_dict(best), sort_keys=True, indent=2)
            + "\n"
        )
    note = (
        f"infidelity {best.metrics.infidelity:.6e} with {best.metrics.n_sdk:.0f} "
        f"SDKs in {best.sequence.gate_time / TWO_PI:g} trap periods\n"
    )
    sys.stderr.write(note)
    if not floor_met:
        sys.stderr.write(
            f"best candidate is below the fidelity floor {args.fidelity_target}\n"
        )
        return 4
    return 0


def cmd_eval(args) -> int:
    solution = persist.load_solution(args.solution)
    _emit(args, json.dumps(persist.metrics_to_dict(solution.metrics),
                           sort_keys=True, indent=2) + "\n")
    return 0


def cmd_verify(args) -> int:
    solution = persist.load_solution(args.solution)
    tol = args.tol if args.tol is not None else 1e-6
    checked = oracle.oracle_metrics(
        solution.sequence, solution.trap, solution.thermal,
        ode_tol=args.ode_tol,
    )
    ana = solution.metrics
    diffs = {
        "theta": abs(checked.theta - ana.theta),
        "infidelity": abs(checked.infidelity - ana.infidelity),
    }
    for mode, got, want in zip(
        solution.trap.modes, checked.displacements, ana.displacements
    ):
        diffs[f"x_{mode.label.lower()}"] = abs(got[0] - want[0])
        diffs[f"y_{mode.label.lower()}"] = abs(got[1] - want[1])
    ok = all(d <= tol for d in diffs.values())
    payload = {
        "analytic": persist.metrics_to_dict(ana),
        "oracle": persist.metrics_to_dict(checked),
        "abs_diff": diffs,
        "tol": tol,
        "ok": ok,
    }
    _emit(args, json.dumps(payload, sort_keys=True, indent=2) + "\n")
    if not ok:
        sys.stderr.write("verification failed: oracle disagrees with analytic\n")
        return 3
    return 0


def _run_sweep(args, axis: str) -> int:
    if args.trap is not None:
        family = [persist.load_trap_config(args.trap)]
    else:
        if args.qx is None:
            raise ConfigError("a trap is required: --trap FILE or --qx LIST")
        family = [
            calibrate(q, args.rf_ratio, args.chi, args.eta, args.rf_phase)
            for q in _qx_list(args.qx)
        ]

    if axis == "gate_time":
        grid = [v * TWO_PI for v in _grid(args.grid)]
        cfg = _search_config(args, grid[0], args.rep_rate, args.seed)
    else:
        grid = _grid(args.grid)
        cfg = _search_config(args, args.gate_time * TWO_PI, grid[0], args.seed)

    pool = _map_context(args.threads)
    map_fn = pool.map if pool is not None else map
    try:
        points = gpg.sweep(family, axis, grid, cfg, map_fn=map_fn)
    finally:
        if pool is not None:
            pool.shutdown()
    rows = []
    for pt in points:
        shown = pt.axis_value / TWO_PI if axis == "gate_time" else pt.axis_value
        rows.append(
            (axis, shown, pt.q_x, pt.infidelity, pt.n_sdk, pt.theta, pt.status)
        )
    out = args.out
    if not out:
        raise ConfigError("sweeps write CSV; --out is required")
    persist.write_csv(out, persist.SWEEP_COLUMNS, rows)
    sys.stderr.write(f"wrote {len(rows)} rows to {out}\n")
    return 0


def cmd_sweep_time(args) -> int:
    return _run_sweep(args, "gate_time")


def cmd_sweep_reprate(args) -> int:
    return _run_sweep(args, "rep_rate")


def cmd_noise(args) -> int:
    solution = persist.load_solution(args.solution)
    try:
        channel = noise.NoiseChannel(
            kind=args.channel,
            sigma=args.sigma,
            samples=args.samples,
            rng_seed=args.seed,
            m_max=args.m_max,
            flip_prob=args.flip_prob,
            bins=args.bins,
            crn=args.crn,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    thermal = _thermal_from_args(args)
    pool = _map_context(args.threads)
    map_fn = pool.map if pool is not None else map
    try:
        if channel.kind == "sdk_error":
            report, _ = noise.mc_sdk_errors(solution, channel, thermal,
                                            map_fn=map_fn)
        else:
            report = noise.mc_parameter_noise(solution, channel, thermal,
                                              map_fn=map_fn)
    finally:
        if pool is not None:
            pool.shutdown()
    _emit(args, json.dumps(persist.report_to_dict(report), sort_keys=True,
                           indent=2) + "\n")
    sys.stderr.write(
        f"{channel.kind}: mean infidelity {report.mean:.6e} over "
        f"{report.samples} samples\n"
    )
    return 0


def cmd_traj(args) -> int:
    solution = persist.load_solution(args.solution)
    seq = solution.sequence
    ts = np.linspace(0.0, seq.gate_time, args.points)
    traj = oracle.integrate(
        seq, solution.trap, ode_tol=args.ode_tol, sample_times=ts
    )
    cm = traj.branch("CM", +1)
    br = traj.branch("BR", +1)
    theta_t = cm.running_phase(ts) - br.running_phase(ts)
    rows = [
        (float(t), float(xc), float(yc), float(xb), float(yb),
         float(abs(th) - math.pi / 4.0))
        for t, xc, yc, xb, yb, th in zip(
            ts, cm.sample_x, cm.sample_y, br.sample_x, br.sample_y, theta_t
        )
    ]
    out = args.out
    if not out:
        raise ConfigError("traj writes CSV; --out is required")
    persist.write_csv(out, persist.TRAJ_COLUMNS, rows)
    sys.stderr.write(f"wrote {len(rows)} rows to {out}\n")
    return 0


def cmd_stability(args) -> int:
    a_grid = np.linspace(args.a_min, args.a_max, args.na)
    q_grid = np.linspace(args.q_min, args.q_max, args.nq)
    rows = []
    for a in a_grid:
        for q in q_grid:
            tr = hill_trace(float(a), float(q))
            rows.append((float(a), float(q), tr, int(abs(tr) < 2.0)))
    out = args.out
    if not out:
        raise ConfigError("stability writes CSV; --out is required")
    persist.write_csv(out, persist.STABILITY_COLUMNS, rows)
    sys.stderr.write(f"wrote {len(rows)} rows to {out}\n")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0, help="RNG seed")
    sub.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker processes (default: FASTGATES_THREADS or 1)",
    )
    sub.add_argument("--out", default=None, help="output path (atomic write)")
    sub.add_argument(
        "--tol",
        type=float,
        default=None,
        help="subcommand tolerance: calibration beta, or verify comparison",
    )


def _add_trap_inputs(sub, qx_required=False, qx_list=False):
    if qx_list:
        sub.add_argument("--qx", default=None,
                         help="comma-separated micromotion amplitudes")
    else:
        sub.add_argument("--qx", type=float, default=None, required=qx_required,
                         help="micromotion amplitude q_x")
    sub.add_argument("--rf-ratio", type=float, default=40.0,
                     help="RF drive over secular frequency")
    sub.add_argument("--chi", type=float, default=-1.4e-2,
                     help="relative mode splitting")
    sub.add_argument("--eta", type=float, default=0.15,
                     help="Lamb-Dicke parameter")
    sub.add_argument("--rf-phase", type=float, default=0.0,
                     help="RF phase at t = 0 (radians)")


def _add_solver(sub):
    sub.add_argument("--n-groups", type=int, default=None,
                     help="kick groups (default scales with RF cycles)")
    sub.add_argument("--multistarts", type=int, default=8)
    sub.add_argument("--z-bound", type=int, default=6,
                     help="per-group kick count bound")
    sub.add_argument("--stage1-iters", type=int, default=300)
    sub.add_argument("--stage2-iters", type=int, default=400)
    sub.add_argument("--stage1-inits", type=int, default=8)
    sub.add_argument("--top-k", type=int, default=8)
    sub.add_argument("--stage1-method", choices=("sgd", "lbfgs"),
                     default="sgd")
    sub.add_argument("--stage2-method", choices=("gradient", "simplex"),
                     default="gradient")
    sub.add_argument("--fidelity-target", type=float, default=0.999)
    sub.add_argument("--nbar-cm", type=float, default=0.0)
    sub.add_argument("--nbar-br", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fastgates",
        description="Design and verify micromotion-aware fast entangling gates.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("calibrate", help="calibrate a trap and write its config")
    _add_trap_inputs(p, qx_required=True)
    _add_common(p)
    p.set_defaults(func=cmd_calibrate)

    p = subs.add_parser("solve", help="design a gate for a target time")
    p.add_argument("--trap", default=None, help="trap config file")
    _add_trap_inputs(p)
    p.add_argument("--gate-time", type=float, required=True,
                   help="target gate time in trap periods")
    p.add_argument("--rep-rate", type=float, default=None,
                   help="SDK repetition rate in omega_0/2pi units")
    _add_solver(p)
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = subs.add_parser("eval", help="re-evaluate a stored solution")
    p.add_argument("--solution", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("verify", help="check a solution against the ODE oracle")
    p.add_argument("--solution", required=True)
    p.add_argument("--ode-tol", type=float, default=1e-12)
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = subs.add_parser("sweep-time", help="sweep gate time")
    p.add_argument("--trap", default=None, help="trap config file")
    _add_trap_inputs(p, qx_list=True)
    p.add_argument("--grid", required=True,
                   help="trap periods, start:stop:count or comma list")
    p.add_argument("--rep-rate", type=float, default=None)
    _add_solver(p)
    _add_common(p)
    p.set_defaults(func=cmd_sweep_time)

    p = subs.add_parser("sweep-reprate", help="sweep SDK repetition rate")
    p.add_argument("--trap", default=None, help="trap config file")
    _add_trap_inputs(p, qx_list=True)
    p.add_argument("--gate-time", type=float, required=True,
                   help="gate time in trap periods")
    p.add_argument("--grid", required=True,
                   help="rep rates in omega_0/2pi units")
    _add_solver(p)
    _add_common(p)
    p.set_defaults(func=cmd_sweep_reprate)

    p = subs.add_parser("noise", help="noise ensemble for a stored solution")
    p.add_argument("--solution", required=True)
    p.add_argument("--channel", required=True, choices=noise.CHANNEL_KINDS)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--m-max", type=int, default=3)
    p.add_argument("--flip-prob", type=float, default=0.5)
    p.add_argument("--bins", type=int, default=32)
    p.add_argument("--crn", action="store_true",
                   help="share randomness across sigma values")
    p.add_argument("--nbar-cm", type=float, default=0.0)
    p.add_argument("--nbar-br", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(func=cmd_noise)

    p = subs.add_parser("traj", help="dump oracle motional trajectories")
    p.add_argument("--solution", required=True)
    p.add_argument("--points", type=int, default=400)
    p.add_argument("--ode-tol", type=float, default=1e-12)
    _add_common(p)
    p.set_defaults(func=cmd_traj)

    p = subs.add_parser("stability", help="rasterize the stability diagram")
    p.add_argument("--a-min", type=float, default=-0.2)
    p.add_argument("--a-max", type=float, default=0.6)
    p.add_argument("--q-min", type=float, default=0.0)
    p.add_argument("--q-max", type=float, default=1.2)
    p.add_argument("--na", type=int, default=40)
    p.add_argument("--nq", type=int, default=40)
    _add_common(p)
    p.set_defaults(func=cmd_stability)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is None:
        args.threads = _default_threads()
    if args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    return args.func(args)


def main(argv=None) -> int:
    try:
        return run(argv)
    except (NoSolution, NoCandidates, InfeasibleSpacing) as exc:
        sys.stderr.write(f"no solution: {exc}\n")
        return 4
    except (ConfigError, InvalidSequence, DomainError) as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 2
    except FastgatesError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 3
    except OSError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
