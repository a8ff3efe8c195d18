"""File formats: trap configs, solution JSON, reports, CSV tables."""

import glob
import json
import math
import os

import numpy as np
import pytest

from fastgates import persist
from fastgates.errors import ConfigError
from fastgates.noise import NoiseChannel, mc_parameter_noise


def test_trap_config_round_trip(tmp_path, trap_q05):
    path = str(tmp_path / "trap.cfg")
    persist.save_trap_config(path, trap_q05)
    loaded = persist.load_trap_config(path)
    for key in persist.TRAP_KEYS:
        assert getattr(loaded, key) == getattr(trap_q05, key)
    # calibration is deterministic, so derived quantities match bit for bit
    assert loaded.a_cm == trap_q05.a_cm
    assert loaded.a_br == trap_q05.a_br
    for label in ("CM", "BR"):
        assert loaded.mode(label).beta == trap_q05.mode(label).beta
        assert loaded.mode(label).omega == trap_q05.mode(label).omega


def test_trap_config_is_commented_text(tmp_path, trap_q01):
    path = str(tmp_path / "trap.cfg")
    persist.save_trap_config(path, trap_q01)
    text = open(path).read()
    assert text.startswith("#")
    assert "q_x = 0.01" in text
    # comments and blank lines are tolerated on re-parse
    noisy = "\n# preamble\n" + text + "\n   \n"
    values = persist.parse_trap_config(noisy)
    assert values["q_x"] == 0.01


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("bogus = 1.0", "unknown key"),
        ("q_x = 0.1\nq_x = 0.2", "duplicate key"),
        ("q_x = 0.1", "missing keys"),
        ("q_x = fast", "bad float"),
        ("just some words", "expected key = value"),
    ],
)
def test_trap_config_parse_errors(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        persist.parse_trap_config(text)


def test_solution_round_trip_re_evaluates(tmp_path, small_solution):
    path = str(tmp_path / "sol.json")
    persist.save_solution(path, small_solution)
    loaded = persist.load_solution(path)
    assert loaded.sequence.kicks == small_solution.sequence.kicks
    assert loaded.sequence.gate_time == small_solution.sequence.gate_time
    assert loaded.sequence.rep_rate == small_solution.sequence.rep_rate
    # metrics come back from a fresh evaluation, bit-identical
    assert loaded.metrics.theta == small_solution.metrics.theta
    assert loaded.metrics.infidelity == small_solution.metrics.infidelity
    assert loaded.metrics.displacements == small_solution.metrics.displacements
    assert "wall_time_s" not in loaded.provenance


def test_solution_save_is_deterministic(tmp_path, small_solution):
    p1 = str(tmp_path / "a.json")
    p2 = str(tmp_path / "b.json")
    persist.save_solution(p1, small_solution)
    persist.save_solution(p2, small_solution)
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_load_solution_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        persist.load_solution(str(bad))
    partial = tmp_path / "partial.json"
    partial.write_text(json.dumps({"sequence": {"kicks": []}}))
    with pytest.raises(ConfigError, match="malformed solution payload"):
        persist.load_solution(str(partial))


def test_atomic_write_replaces_and_leaves_no_temp(tmp_path):
    path = str(tmp_path / "out.txt")
    persist.atomic_write(path, "first\n")
    persist.atomic_write(path, "second\n")
    assert open(path).read() == "second\n"
    assert glob.glob(str(tmp_path / ".fastgates-*")) == []


def test_atomic_write_failure_keeps_original(tmp_path):
    path = str(tmp_path / "out.txt")
    persist.atomic_write(path, "keep me\n")
    with pytest.raises(TypeError):
        persist.atomic_write(path, b"bytes are not text")
    assert open(path).read() == "keep me\n"
    assert glob.glob(str(tmp_path / ".fastgates-*")) == []


def test_write_csv_full_precision(tmp_path):
    path = str(tmp_path / "table.csv")
    rows = [(0.1, 1 / 3, "ok"), (math.pi, 2e-17, "ok")]
    persist.write_csv(path, ("a", "b", "status"), rows)
    lines = open(path).read().splitlines()
    assert lines[0] == "a,b,status"
    for line, row in zip(lines[1:], rows):
        cells = line.split(",")
        assert float(cells[0]) == row[0]
        assert float(cells[1]) == row[1]
    # same rows, same bytes
    path2 = str(tmp_path / "table2.csv")
    persist.write_csv(path2, ("a", "b", "status"), rows)
    assert open(path, "rb").read() == open(path2, "rb").read()


def test_report_round_trip(tmp_path, small_solution, vacuum):
    ch = NoiseChannel(kind="timing_jitter", sigma=0.0, samples=1)
    report = mc_parameter_noise(small_solution, ch, vacuum)
    payload = persist.report_to_dict(report)
    assert payload["channel"]["kind"] == "timing_jitter"
    assert payload["mean"] == report.mean
    assert payload["histogram"]["mass"] == report.hist_mass.tolist()
    path = str(tmp_path / "report.json")
    persist.save_report(path, report)
    back = json.loads(open(path).read())
    assert back["mean"] == report.mean
    assert back["extras"]["degenerate"] is True
    assert np.allclose(back["histogram"]["edges"], report.hist_edges)


def test_column_schemas_are_fixed():
    assert persist.SWEEP_COLUMNS[0] == "axis"
    assert persist.TRAJ_COLUMNS == ("t", "x_cm", "y_cm", "x_br", "y_br", "dphi")
    assert persist.STABILITY_COLUMNS == ("a", "q", "trace", "stable")
    assert set(persist.TRAP_KEYS) == {"q_x", "rf_ratio", "chi", "eta", "rf_phase"}
