import json

import numpy as np
import pytest

from gaitrep import load_profile
from gaitrep.cli import (
    EXIT_INFEASIBLE,
    EXIT_OK,
    EXIT_VALIDATION,
    RunConfig,
    angle_rmse_deg,
    main,
)


def run(argv):
    return main(argv)


def test_gen_profile_round_trips(tmp_path):
    out = tmp_path / "walk.csv"
    code = run(["gen-profile", "--motion", "walk", "--dt", "0.005", "--out", str(out)])
    assert code == EXIT_OK
    profile = load_profile(out)
    assert profile.duration == pytest.approx(1.2)
    assert profile.n_samples == 241


def test_simulate_walk_summary(tmp_path, capsys):
    out = tmp_path / "run"
    code = run(
        ["simulate", "--profile", "synthetic:walk", "--dt", "0.002", "--out-dir", str(out)]
    )
    assert code == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["rmse_deg"]["hip"] < 1.0
    assert summary["rmse_deg"]["knee"] < 1.0
    assert summary["max_care_residual"] < 1e-8
    assert summary["max_closed_loop_real"] < 0.0
    assert (out / "tracking.csv").exists()
    # stdout carries the same payload
    assert json.loads(capsys.readouterr().out)["rmse_deg"]["hip"] < 1.0


def test_simulate_deterministic_rerun(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    argv = ["simulate", "--profile", "synthetic:walk", "--dt", "0.002", "--seed", "3"]
    assert run(argv + ["--out-dir", str(out1)]) == EXIT_OK
    assert run(argv + ["--out-dir", str(out2)]) == EXIT_OK
    assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()
    assert (out1 / "tracking.csv").read_bytes() == (out2 / "tracking.csv").read_bytes()


def test_simulate_zero_duration_profile_fails(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,hip,knee\n", encoding="utf-8")
    code = run(["simulate", "--profile", str(bad), "--out-dir", str(tmp_path / "o")])
    assert code == EXIT_VALIDATION
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ValidationError"


def test_simulate_missing_profile_flag(tmp_path, capsys):
    code = run(["simulate", "--out-dir", str(tmp_path / "o")])
    assert code == EXIT_VALIDATION
    assert json.loads(capsys.readouterr().err)["error"] == "ValidationError"


def test_parameterize_outputs(tmp_path):
    out = tmp_path / "param"
    code = run(
        [
            "parameterize", "--profile", "synthetic:walk", "--dt", "0.005",
            "--reference", "human", "--max-evals", "800", "--starts", "2",
            "--out-dir", str(out), "--seed", "0",
        ]
    )
    assert code == EXIT_OK
    doc = json.loads((out / "plan.json").read_text())
    assert doc["cost"] <= doc["cost_init"]
    n_nodes = len(doc["nodes"])
    assert len(doc["hip"]["w"]) == n_nodes - 1
    plan_rows = (out / "plan.csv").read_text().strip().splitlines()
    assert len(plan_rows) - 1 == n_nodes - 1
    trace = np.loadtxt(out / "cost_trace.csv", delimiter=",", skiprows=1)
    assert np.all(np.diff(trace[:, 1]) <= 0.0)
    commands = (out / "commands.csv").read_text().strip().splitlines()
    assert len(commands) - 1 == 2 * (n_nodes - 1)  # both joints


def test_parameterize_inverted_bounds(tmp_path, capsys):
    code = run(
        [
            "parameterize", "--profile", "synthetic:walk", "--dt", "0.005",
            "--bounds", "6,-6,-40,40", "--out-dir", str(tmp_path / "o"),
        ]
    )
    assert code == EXIT_INFEASIBLE
    assert json.loads(capsys.readouterr().err)["error"] == "InfeasibleBounds"


def test_compare_report_and_ordering(tmp_path):
    out = tmp_path / "cmp"
    argv = [
        "compare", "--profile", "synthetic:walk", "--dt", "0.005",
        "--max-evals", "600", "--starts", "2", "--seed", "0", "--out-dir", str(out),
    ]
    assert run(argv) == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert len(report["rows"]) == 2
    for row in report["rows"]:
        assert row["rmse_plan_deg"] >= row["rmse_sdre_deg"]
        assert np.isfinite(row["rmse_plan_deg"]) and np.isfinite(row["rmse_sdre_deg"])
        assert row["torque_rmse_plan"] >= row["torque_rmse_sdre"]
    assert (out / "report.csv").exists()
    assert (out / "torque_series.csv").exists()
    assert (out / "report.txt").exists()

    # Deterministic rerun, byte for byte.
    out2 = tmp_path / "cmp2"
    assert run(argv[:-1] + [str(out2)]) == EXIT_OK
    assert (out / "report.json").read_bytes() == (out2 / "report.json").read_bytes()


def test_config_hash_tracks_settings(tmp_path):
    cfg_a = RunConfig(dt=1e-3)
    cfg_b = RunConfig(dt=2e-3)
    assert cfg_a.config_hash() != cfg_b.config_hash()
    assert cfg_a.config_hash() == RunConfig(dt=1e-3).config_hash()


def test_config_file_and_flag_override(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"dt": 0.004, "eta": 2.0}), encoding="utf-8")
    out = tmp_path / "o"
    code = run(
        [
            "simulate", "--profile", "synthetic:walk", "--config", str(cfg_path),
            "--dt", "0.006", "--out-dir", str(out),
        ]
    )
    assert code == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    # Flag dt=0.006 overrides the file's 0.004: 1.2 s / 6 ms + 1 samples.
    assert summary["n_steps"] == 201


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"not_a_key": 1}), encoding="utf-8")
    code = run(["simulate", "--profile", "synthetic:walk", "--config", str(cfg_path)])
    assert code == EXIT_VALIDATION
    assert json.loads(capsys.readouterr().err)["error"] == "ValidationError"


def test_check_passes_on_bundled_profiles(tmp_path):
    for profile in ("synthetic:walk", "synthetic:squat"):
        out = tmp_path / profile.split(":")[1]
        code = run(["check", "--profile", profile, "--dt", "0.005", "--out-dir", str(out)])
        assert code == EXIT_OK
        diag = json.loads((out / "check.json").read_text())
        assert diag["stabilizable_all"] is True
        assert diag["detectable_full_state_all"] is True
        assert diag["detectable_qroot_all"] is True
        assert diag["max_care_residual"] < 1e-8
        assert diag["n_points"] >= 100


def test_check_rejects_degenerate_leg(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg = RunConfig()
    cfg.leg["mc2"] = 0.0
    cfg_path.write_text(json.dumps({"leg": cfg.leg}), encoding="utf-8")
    code = run(
        ["check", "--profile", "synthetic:walk", "--config", str(cfg_path),
         "--out-dir", str(tmp_path / "o")]
    )
    assert code == EXIT_VALIDATION
    assert json.loads(capsys.readouterr().err)["error"] == "ValidationError"


def test_angle_rmse_against_itself_is_zero():
    theta = np.random.default_rng(0).uniform(-1, 1, (100, 2))
    assert np.array_equal(angle_rmse_deg(theta, theta), np.zeros(2))
