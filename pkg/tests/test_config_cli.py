"""Config parsing, CLI outputs, exit codes, and reproducibility contracts."""

import json
from pathlib import Path

import numpy as np
import pytest

import tradeoff_lab.cli as cli
import tradeoff_lab.experiments
from tradeoff_lab.config import (
    ConfigError,
    ExperimentConfig,
    config_hash,
    emit_config,
    parse_config,
    parse_config_text,
)
from tradeoff_lab.errors import ConvergenceError


def test_minimal_config_defaults():
    cfg = parse_config_text("scenario = spline_m\nm = 2\nseed = 42\n")
    assert cfg.alpha == 0.5
    assert cfg.f0 == "sin2pi"
    assert cfg.n_list == (128, 256, 512, 1024, 2048, 4096, 8192)
    assert cfg.seed == 42
    assert cfg.reps == 100
    assert cfg.radius_grid_size == 64


def test_tv_defaults():
    cfg = parse_config_text("scenario = tv\n")
    assert cfg.alpha == 1.0
    assert cfg.f0 == "step3"
    assert cfg.m is None


def test_rejections():
    with pytest.raises(ConfigError, match="incompatible"):
        parse_config_text("scenario = tv\nm = 2\n")
    with pytest.raises(ConfigError, match="alpha"):
        parse_config_text("scenario = spline_m\nm = 2\nalpha = 2.5\n")
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("scenario = tv\nwavelength = 3\n")
    with pytest.raises(ConfigError, match="line 3"):
        parse_config_text("scenario = tv\nreps = 60\nreps = 61\n")
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text("scenario = tv\nreps = sixty\n")
    with pytest.raises(ConfigError, match="scenario"):
        parse_config_text("reps = 60\n")
    with pytest.raises(ConfigError, match="increasing"):
        parse_config_text("scenario = tv\nn_list = 64,64\n")
    with pytest.raises(ConfigError, match="not found"):
        parse_config("/nonexistent/path.cfg")
    with pytest.raises(ConfigError, match="key = value"):
        parse_config_text("scenario tv\n")


def test_round_trip():
    for text in (
        "scenario = spline_m\nm = 3\nseed = 7\nn_list = 10,20,40\n",
        "scenario = tv\nf0 = step3\nlambda_scale = 0.5\nalpha = 1.2\n",
    ):
        cfg = parse_config_text(text)
        assert parse_config_text(emit_config(cfg)) == cfg
        assert config_hash(cfg) == config_hash(parse_config_text(emit_config(cfg)))


def test_step_alias_normalizes():
    cfg = parse_config_text("scenario = tv\nf0 = step\n")
    assert cfg.f0 == "step3"


def toy_cfg_file(tmp_path, **kw):
    base = dict(scenario="spline_m", m=2, n_list=(16,), reps=50, seed=3,
                radius_grid_size=12, out_dir=str(tmp_path / "out"))
    base.update(kw)
    cfg = ExperimentConfig(**base)
    path = tmp_path / "cfg.txt"
    path.write_text(emit_config(cfg))
    return path, cfg


def test_cli_landscape_schema(tmp_path):
    path, cfg = toy_cfg_file(tmp_path, n_list=(3,), radius_grid_size=8)
    assert cli.main(["landscape", "--config", str(path)]) == 0
    out = Path(cfg.out_dir)
    lines = (out / "landscape.csv").read_text().splitlines()
    assert lines[0].split(",")[:3] == ["R", "M_n", "H_n"]
    assert len(lines) == 1 + cfg.radius_grid_size  # header + one row per radius
    summary = json.loads((out / "landscape_summary.json").read_text())
    assert summary["schema_version"] == 1
    assert abs(summary["tau_minus_r_star"]) < 1e-6
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["master_seed"] == 3
    assert manifest["config_hash"] == config_hash(cfg)
    assert "philox" in manifest["generator"]


def test_cli_fit_outputs(tmp_path):
    path, cfg = toy_cfg_file(tmp_path)
    assert cli.main(["fit", "--config", str(path)]) == 0
    out = Path(cfg.out_dir)
    lines = (out / "fit.csv").read_text().splitlines()
    assert lines[0].split(",")[:4] == ["x", "f0", "y", "fhat"]
    assert len(lines) == 1 + 16
    summary = json.loads((out / "fit_summary.json").read_text())
    assert {"tau", "penalty", "fit_error", "objective", "kkt_residual"} <= set(summary)


def test_cli_rate_scan_fields(tmp_path):
    path, cfg = toy_cfg_file(tmp_path, n_list=(16, 32, 64), reps=8)
    assert cli.main(["rate-scan", "--config", str(path)]) == 0
    out = Path(cfg.out_dir)
    summary = json.loads((out / "rate_scan_summary.json").read_text())
    for key in ("target_slope", "fitted_slope_r0", "fitted_slope_tau", "ci_low", "ci_high"):
        assert key in summary
    rows = (out / "rate_scan.csv").read_text().splitlines()
    assert len(rows) == 1 + 3


def test_cli_concentration_rows_and_determinism(tmp_path):
    path, cfg = toy_cfg_file(tmp_path, n_list=(16, 32), reps=50)
    assert cli.main(["concentration", "--config", str(path)]) == 0
    out = Path(cfg.out_dir)
    body1 = (out / "concentration.csv").read_bytes()
    lines = body1.decode().splitlines()
    assert len(lines) == 1 + 20 * len(cfg.n_list)  # no silent truncation
    # byte-identical rerun, and byte-identical across thread counts
    assert cli.main(["concentration", "--config", str(path)]) == 0
    assert (out / "concentration.csv").read_bytes() == body1
    assert cli.main(["concentration", "--config", str(path), "--threads", "8"]) == 0
    assert (out / "concentration.csv").read_bytes() == body1


def test_cli_audit_gates(tmp_path):
    path, cfg = toy_cfg_file(tmp_path, n_list=(16, 32, 64), reps=30, radius_grid_size=16)
    assert cli.main(["audit", "--config", str(path)]) == 0
    out = Path(cfg.out_dir)
    summary = json.loads((out / "audit_summary.json").read_text())
    gates = summary["gates"]
    assert gates["concavity_ok"] and gates["landscape_tail_dominance_ok"]
    assert "sandwich_scaling_ok" in gates
    assert (out / "landscape_tail.csv").exists()
    assert (out / "sandwich.csv").exists()


def test_cli_exit_codes(tmp_path, monkeypatch):
    bad = tmp_path / "bad.cfg"
    bad.write_text("scenario = tv\nalpha = 77\n")
    assert cli.main(["fit", "--config", str(bad)]) == cli.EXIT_VALIDATION
    assert cli.main(["fit", "--config", str(tmp_path / "missing.cfg")]) == cli.EXIT_VALIDATION

    path, cfg = toy_cfg_file(tmp_path, n_list=(16, 32), reps=50)

    def fail_numerically(*a, **kw):
        raise ConvergenceError("no convergence", residual=1.0)

    monkeypatch.setattr(cli, "concentration_experiment", fail_numerically)
    assert cli.main(["concentration", "--config", str(path)]) == cli.EXIT_NUMERICAL
    monkeypatch.undo()

    real = tradeoff_lab.experiments.concentration_experiment

    def gate_fails(cfg_, n, threads=1):
        table, stats = real(cfg_, n, threads=threads)
        import dataclasses

        return dataclasses.replace(table, dominance_ok=False), stats

    monkeypatch.setattr(cli, "concentration_experiment", gate_fails)
    assert cli.main(["concentration", "--config", str(path)]) == cli.EXIT_GATE


def test_cli_seed_and_out_overrides(tmp_path, monkeypatch):
    path, cfg = toy_cfg_file(tmp_path)
    other = tmp_path / "elsewhere"
    assert cli.main(["fit", "--config", str(path), "--seed", "99", "--out", str(other)]) == 0
    manifest = json.loads((other / "manifest.json").read_text())
    assert manifest["master_seed"] == 99
    env_out = tmp_path / "env_out"
    monkeypatch.setenv("TRADEOFF_LAB_SEED", "123")
    monkeypatch.setenv("TRADEOFF_LAB_OUT", str(env_out))
    assert cli.main(["fit", "--config", str(path)]) == 0
    manifest = json.loads((env_out / "manifest.json").read_text())
    assert manifest["master_seed"] == 123


def test_csv_full_precision(tmp_path):
    path, cfg = toy_cfg_file(tmp_path, n_list=(3,), radius_grid_size=8)
    assert cli.main(["landscape", "--config", str(path)]) == 0
    lines = (Path(cfg.out_dir) / "landscape.csv").read_text().splitlines()
    radii = [float(row.split(",")[0]) for row in lines[1:]]
    # 17 significant digits round-trip float64 exactly
    import tradeoff_lab as tl
    from tradeoff_lab.experiments import build_problem, radius_grid_for

    p = build_problem(cfg, 3)
    expected = radius_grid_for(cfg, p)
    assert np.array_equal(np.asarray(radii), expected)
