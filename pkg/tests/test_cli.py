"""Tests for the command-line surface.

Commands are exercised through `cli.main(argv)` for speed; one test
drives the installed console script end-to-end through a subprocess.
Exit codes are part of the contract: 0 success, 1 validation, 2
synthesis failure, 3 runtime failure.
"""

import pathlib
import subprocess
import sys

import numpy as np
import pytest

from linetemp import artifact, cli, output, scenario, sim

SCENARIO_PATH = (pathlib.Path(__file__).resolve().parents[1]
                 / "scenarios" / "isle_jourdain.scenario")


@pytest.fixture(scope="module")
def ctl_path(tmp_path_factory):
    out = tmp_path_factory.mktemp("artifact") / "controller.json"
    rc = cli.main(["synthesize", str(SCENARIO_PATH), "-o", str(out)])
    assert rc == cli.EXIT_OK
    return out


# ------------------------------------------------------------- validate

def test_validate_bundled_scenario(capsys):
    rc = cli.main(["validate", str(SCENARIO_PATH)])
    assert rc == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "scenario: isle-jourdain-90kv" in out
    assert "valid: True" in out


def test_validate_reports_every_error_at_once(tmp_path, capsys):
    text = SCENARIO_PATH.read_text(encoding="utf-8")
    text = text.replace("ptdf: [0.36, 0.36]", "ptdf: [1.5, 0.36]", 1)
    bad = tmp_path / "bad.scenario"
    bad.write_text(text.replace("disturbance_mode: uniform-box",
                                "disturbance_mode: chaotic"),
                   encoding="utf-8")
    rc = cli.main(["validate", str(bad)])
    assert rc == cli.EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "ptdf[0]" in err and "must lie in [-1, 1]" in err
    assert "disturbance_mode" in err


def test_validate_missing_file(capsys):
    rc = cli.main(["validate", "/nonexistent/path.scenario"])
    assert rc == cli.EXIT_VALIDATION
    assert "cannot read scenario" in capsys.readouterr().err


# ----------------------------------------------------------- synthesize

def test_synthesize_writes_loadable_artifact(ctl_path, capsys):
    scn, sha = scenario.load_scenario(SCENARIO_PATH)
    ctl, rep = artifact.load_controller(ctl_path, scn, sha)
    assert rep["poles_requested"][:4] == [0.7, 0.9, 0.45, 0.21]
    assert not rep["tightened_control_empty"]


def test_synthesize_report_shows_requested_poles(tmp_path, capsys):
    out = tmp_path / "c.json"
    rc = cli.main(["synthesize", str(SCENARIO_PATH), "-o", str(out)])
    assert rc == cli.EXIT_OK
    text = capsys.readouterr().out
    assert "poles_requested: [0.7, 0.9, 0.45, 0.21" in text
    assert "tightened_state_empty: False" in text
    assert "tightened_control_empty: False" in text


def test_synthesize_large_disturbance_fails_with_diagnostic(tmp_path,
                                                            capsys):
    text = SCENARIO_PATH.read_text(encoding="utf-8")
    big = tmp_path / "big.scenario"
    big.write_text(text.replace("flow_MW: 0.1", "flow_MW: 1.0"),
                   encoding="utf-8")
    rc = cli.main(["synthesize", str(big), "-o", str(tmp_path / "c.json")])
    assert rc == cli.EXIT_SYNTHESIS
    err = capsys.readouterr().err
    assert "disturbance set too large for constraints" in err


# ------------------------------------------------------------- simulate

def test_simulate_controlled_writes_all_outputs(ctl_path, tmp_path, capsys):
    csv_p = tmp_path / "run.csv"
    rep_p = tmp_path / "run.txt"
    svg_p = tmp_path / "run.svg"
    rc = cli.main(["simulate", str(SCENARIO_PATH), str(ctl_path),
                   "--steps", "20",
                   "--csv", str(csv_p), "--report", str(rep_p),
                   "--svg", str(svg_p)])
    assert rc == cli.EXIT_OK
    out = capsys.readouterr().out
    assert rep_p.read_text(encoding="utf-8") == out
    assert "mode: controlled" in out
    assert "violations: 0" in out
    got = output.read_csv(csv_p)
    assert got["time_s"].size == 20
    assert got["qp_status"] == ("optimal",) * 20
    assert svg_p.read_text(encoding="utf-8").startswith("<svg")


def test_simulate_free_on_stress_scenario_violates(tmp_path, capsys):
    rep_p = tmp_path / "free.txt"
    rc = cli.main(["simulate", str(SCENARIO_PATH), "--free",
                   "--report", str(rep_p)])
    assert rc == cli.EXIT_OK
    text = rep_p.read_text(encoding="utf-8")
    assert "mode: free" in text
    viol = int(text.split("violations: ")[1].splitlines()[0])
    assert viol > 0


def test_simulate_requires_controller_unless_free(capsys):
    rc = cli.main(["simulate", str(SCENARIO_PATH)])
    assert rc == cli.EXIT_VALIDATION
    assert "required unless --free" in capsys.readouterr().err


def test_simulate_hash_mismatch_rejected(ctl_path, tmp_path, capsys):
    edited = tmp_path / "edited.scenario"
    edited.write_text(SCENARIO_PATH.read_text(encoding="utf-8") + "\n# x\n",
                      encoding="utf-8")
    rc = cli.main(["simulate", str(edited), str(ctl_path)])
    assert rc == cli.EXIT_VALIDATION
    assert "scenario hash mismatch" in capsys.readouterr().err


def test_simulate_zero_steps_header_only_csv(ctl_path, tmp_path, capsys):
    csv_p = tmp_path / "zero.csv"
    rc = cli.main(["simulate", str(SCENARIO_PATH), str(ctl_path),
                   "--steps", "0", "--csv", str(csv_p)])
    assert rc == cli.EXIT_OK
    lines = csv_p.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1
    out = capsys.readouterr().out
    assert "steps: 0" in out
    assert "violations: 0" in out
    assert "curtailed_MWh: 0.0" in out
    assert "battery_throughput_MWh: 0.0" in out


def test_simulate_seed_override_changes_the_run(ctl_path, tmp_path):
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    for path, seed in ((a, "3"), (b, "3"), (c, "4")):
        rc = cli.main(["simulate", str(SCENARIO_PATH), str(ctl_path),
                       "--steps", "12", "--seed", seed,
                       "--csv", str(path)])
        assert rc == cli.EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_simulate_runtime_failure_maps_to_exit_3(ctl_path, monkeypatch,
                                                 capsys):
    def boom(*a, **k):
        raise RuntimeError("battery energy bound breached at step 5")
    monkeypatch.setattr(sim, "run_closed_loop", boom)
    rc = cli.main(["simulate", str(SCENARIO_PATH), str(ctl_path)])
    assert rc == cli.EXIT_RUNTIME
    assert "simulation aborted" in capsys.readouterr().err


# -------------------------------------------------------- console script

def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "linetemp.cli", "validate",
         str(SCENARIO_PATH)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "valid: True" in proc.stdout
