from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from echosim.harness.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, main
from echosim.harness.scenario import from_dict, load_scenario
from echosim.harness.trace import read_trace

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
HONEST = str(SCENARIOS / "honest.json")


def test_run_writes_trace_with_header(tmp_path, capsys):
    out = tmp_path / "t.jsonl"
    assert main(["run", HONEST, "--out", str(out), "--quiet"]) == EXIT_OK
    assert capsys.readouterr().err == ""
    header, records = read_trace(out.read_text().splitlines())
    assert from_dict(header) == load_scenario(HONEST)
    assert [r["detail"]["verdict"] for r in records if r["kind"] == "verdict"] == ["accept", "grant"]


def test_run_to_stdout_and_seed_override(capsys):
    assert main(["run", HONEST, "--seed", "9"]) == EXIT_OK
    captured = capsys.readouterr()
    header = json.loads(captured.out.splitlines()[0])
    assert header["scenario"]["seed"] == 9
    assert json.loads(captured.err)["accepts"] == 1


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"verifiers": [], "provers": [], "colour": 1}')
    assert main(["run", str(bad)]) == EXIT_CONFIG
    assert "colour" in capsys.readouterr().err
    bad.write_text("{ not json")
    assert main(["run", str(bad)]) == EXIT_CONFIG


def test_io_error_exit_codes(tmp_path):
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_IO
    assert main(["run", HONEST, "--out", str(tmp_path / "no" / "such" / "dir.jsonl")]) == EXIT_IO


@pytest.mark.skipif(not os.path.exists("/dev/full"), reason="needs /dev/full")
def test_sink_write_failure_is_io_error():
    proc = subprocess.run([sys.executable, "-m", "echosim", "run", HONEST, "--out", "/dev/full", "--quiet"],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_IO


def test_sweep_is_reproducible_across_jobs(tmp_path, capsys):
    assert main(["sweep", HONEST, "--seeds", "4"]) == EXIT_OK
    serial = capsys.readouterr().out
    assert main(["sweep", HONEST, "--seeds", "4", "--jobs", "2", "--out-dir", str(tmp_path)]) == EXIT_OK
    assert capsys.readouterr().out == serial
    assert sorted(p.name for p in tmp_path.iterdir()) == [f"trace-{k}.jsonl" for k in range(4)]
    last = json.loads(serial.splitlines()[-1])
    assert last["runs"] == 4 and last["totals"]["accepts"] == 4


def test_matrix_json(capsys):
    assert main(["matrix", "--runs", "2", "--json"]) == EXIT_OK
    rows = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert len(rows) == 12 and all(r["matches"] for r in rows)


def test_module_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "echosim", "run", HONEST, "--quiet"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.count("\n") > 5
