"""On-disk formats: trap config files, solution/report JSON, CSV tables.

All writers are atomic (temp file in the destination directory, then
os.replace) and print floats at full round-trip precision via repr, so a
rerun with the same seed and configuration produces byte-identical files.
Wall-clock provenance is dropped at serialization time for the same reason.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile

import numpy as np

from .errors import ConfigError
from .gatekernel import GateMetrics, KickSequence, ThermalState
from .gpg import GateSolution
from .noise import NoiseChannel, NoiseReport
from .trap import TrapConfig, calibrate

TRAP_KEYS = ("q_x", "rf_ratio", "chi", "eta", "rf_phase")

SWEEP_COLUMNS = ("axis", "axis_value", "q_x", "infidelity", "n_sdk", "theta", "status")
TRAJ_COLUMNS = ("t", "x_cm", "y_cm", "x_br", "y_br", "dphi")
STABILITY_COLUMNS = ("a", "q", "trace", "stable")


def atomic_write(path: str, text: str) -> None:
    """Write text to path via a temp file and rename; never a partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".fastgates-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def save_trap_config(path: str, trap: TrapConfig) -> None:
    lines = ["# trap calibration inputs (trap units: omega_CM = 1)"]
    for key in TRAP_KEYS:
        lines.append(f"{key} = {_fmt(getattr(trap, key))}")
    atomic_write(path, "\n".join(lines) + "\n")


def parse_trap_config(text: str) -> dict:
    """Parse key = value lines with # comments into calibrate() kwargs."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, rhs = line.partition("=")
        key = key.strip()
        if key not in TRAP_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = float(rhs.strip())
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad float {rhs.strip()!r}") from exc
    missing = [k for k in TRAP_KEYS if k not in values]
    if missing:
        raise ConfigError(f"missing keys: {', '.join(missing)}")
    return values


def load_trap_config(path: str) -> TrapConfig:
    with open(path) as fh:
        return calibrate(**parse_trap_config(fh.read()))


def metrics_to_dict(metrics: GateMetrics) -> dict:
    return {
        "theta": metrics.theta,
        "phase_error": metrics.phase_error,
        "displacements": [list(pair) for pair in metrics.displacements],
        "infidelity": metrics.infidelity,
        "n_sdk": metrics.n_sdk,
    }


def solution_to_dict(solution: GateSolution) -> dict:
    provenance = {
        k: v for k, v in solution.provenance.items() if k != "wall_time_s"
    }
    return {
        "sequence": {
            "kicks": [[t, z] for t, z in solution.sequence.kicks],
            "gate_time": solution.sequence.gate_time,
            "rep_rate": solution.sequence.rep_rate,
        },
        "trap": {key: getattr(solution.trap, key) for key in TRAP_KEYS},
        "thermal": {
            "nbar_cm": solution.thermal.nbar_cm,
            "nbar_br": solution.thermal.nbar_br,
        },
        "metrics": metrics_to_dict(solution.metrics),
        "provenance": provenance,
    }


def solution_from_dict(payload: dict) -> GateSolution:
    from .gatekernel import evaluate

    try:
        seq = KickSequence(
            kicks=tuple((float(t), int(z)) for t, z in payload["sequence"]["kicks"]),
            gate_time=float(payload["sequence"]["gate_time"]),
            rep_rate=payload["sequence"]["rep_rate"],
        )
        trap = calibrate(**{k: float(payload["trap"][k]) for k in TRAP_KEYS})
        thermal = ThermalState(
            nbar_cm=float(payload["thermal"]["nbar_cm"]),
            nbar_br=float(payload["thermal"]["nbar_br"]),
        )
        provenance = dict(payload.get("provenance", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed solution payload: {exc}") from exc
    metrics = evaluate(seq, trap, thermal)
    return GateSolution(
        sequence=seq, metrics=metrics, trap=trap, thermal=thermal,
        provenance=provenance,
    )


def save_solution(path: str, solution: GateSolution) -> None:
    atomic_write(path, json.dumps(solution_to_dict(solution), sort_keys=True,
                                  indent=2) + "\n")


def load_solution(path: str) -> GateSolution:
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return solution_from_dict(payload)


def channel_to_dict(ch: NoiseChannel) -> dict:
    return {
        "kind": ch.kind,
        "sigma": ch.sigma,
        "samples": ch.samples,
        "rng_seed": ch.rng_seed,
        "m_max": ch.m_max,
        "flip_prob": ch.flip_prob,
        "bins": ch.bins,
        "crn": ch.crn,
    }


def report_to_dict(report: NoiseReport) -> dict:
    extras = {}
    for key, value in report.extras.items():
        if isinstance(value, np.ndarray):
            value = value.tolist()
        extras[key] = value
    return {
        "channel": channel_to_dict(report.channel),
        "mean": report.mean,
        "variance": report.variance,
        "samples": report.samples,
        "seed": report.seed,
        "histogram": {
            "edges": report.hist_edges.tolist(),
            "mass": report.hist_mass.tolist(),
        },
        "extras": extras,
    }


def save_report(path: str, report: NoiseReport) -> None:
    atomic_write(path, json.dumps(report_to_dict(report), sort_keys=True,
                                  indent=2) + "\n")


def write_csv(path: str, columns: tuple[str, ...], rows) -> None:
    """CSV with a fixed header; floats at full precision."""
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(cell) for cell in row])
    atomic_write(path, buf.getvalue())
