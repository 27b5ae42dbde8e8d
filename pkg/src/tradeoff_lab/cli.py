"""Command-line experiment runner.

    tradeoff-lab <subcommand> --config <path> [--seed N] [--out DIR] [--threads K]

Subcommands: ``fit``, ``landscape``, ``concentration``, ``rate-scan``,
``audit``.  Each run writes result tables as CSV (header row, fixed column
order, 17 significant digits, '.' decimal separator), a JSON summary with a
``schema_version`` field, and a ``manifest.json`` recording the config hash,
master seed, generator algorithm, tool version, and output paths.  Identical
(config, seed, version) produce byte-identical CSV/JSON results for any
thread count; only the manifest timestamp varies.

Exit codes: 0 success, 2 validation failure, 3 numerical non-convergence,
4 failed acceptance gate (e.g. tail dominance violated).
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, config_hash, parse_config
from .errors import ConvergenceError, GridTooNarrowError, NumericalError
from .estimator import fit, noiseless_fit
from .experiments import (
    build_problem,
    concavity_experiment,
    concentration_experiment,
    landscape_tail_audit,
    radius_grid_for,
    rate_scan,
    sandwich_scaling_report,
)
from .landscape import GENERATOR_ALGORITHM, draw_noise, landscape_curve

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_GATE = 4


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def _atomic_write(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_json(path: Path, payload: dict):
    payload = {"schema_version": SCHEMA_VERSION, **_jsonable(payload)}
    _atomic_write(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def write_manifest(out_dir: Path, cfg: ExperimentConfig, scenario_cmd: str, outputs):
    manifest = {
        "config_hash": config_hash(cfg),
        "master_seed": cfg.seed,
        "generator": GENERATOR_ALGORITHM,
        "tool_version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "scenario": cfg.scenario,
        "subcommand": scenario_cmd,
        "outputs": [str(p) for p in outputs],
    }
    _atomic_write(out_dir / "manifest.json", json.dumps(manifest, sort_keys=True, indent=2) + "\n")


def _cmd_fit(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    n = cfg.n_list[0]
    p = build_problem(cfg, n)
    draw = draw_noise(n, cfg.seed, 0)
    y = p.f0 + draw.epsilon
    res = fit(p, y)
    header = ("x", "f0", "y", "fhat", "master_seed", "config_hash")
    h = config_hash(cfg)
    rows = [
        (x, f0v, yv, fv, cfg.seed, h)
        for x, f0v, yv, fv in zip(p.grid.points, p.f0, y, res.fhat)
    ]
    write_csv(out / "fit.csv", header, rows)
    write_json(out / "fit_summary.json", {
        "n": n,
        "lambda": p.lam,
        "fit_error": res.fit_error,
        "penalty": res.penalty,
        "tau": res.tau,
        "objective": res.objective,
        "kkt_residual": res.kkt_residual,
        "master_seed": cfg.seed,
        "config_hash": h,
    })
    return EXIT_OK


def _cmd_landscape(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    n = cfg.n_list[0]
    p = build_problem(cfg, n)
    radii = radius_grid_for(cfg, p)
    draw = draw_noise(n, cfg.seed, 0)
    curve = landscape_curve(p, draw, radii)
    res = fit(p, p.f0 + draw.epsilon)
    h = config_hash(cfg)
    header = ("R", "M_n", "H_n", "master_seed", "config_hash")
    rows = [
        (r, m, hv, cfg.seed, h)
        for r, m, hv in zip(curve.radii, curve.m_values, curve.h_values)
    ]
    write_csv(out / "landscape.csv", header, rows)
    _, r_min = noiseless_fit(p)
    write_json(out / "landscape_summary.json", {
        "n": n,
        "lambda": p.lam,
        "r_min": r_min,
        "r_star": curve.r_star,
        "h_at_r_star": curve.h_at_r_star,
        "tau": res.tau,
        "tau_minus_r_star": res.tau - curve.r_star,
        "master_seed": cfg.seed,
        "config_hash": h,
    })
    return EXIT_OK


def _cmd_concentration(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    all_rows = []
    header = None
    gates = {}
    stats_rows = []
    for n in cfg.n_list:
        table, mc_stats = concentration_experiment(cfg, n, threads=threads)
        header, rows = table.rows()
        all_rows.extend(rows)
        gates[f"dominance_ok_n{n}"] = table.dominance_ok
        stats_rows.append(mc_stats)
    write_csv(out / "concentration.csv", header, all_rows)
    write_json(out / "concentration_summary.json", {
        "gates": gates,
        "r0_hat": {str(s.n): s.r0_hat for s in stats_rows},
        "tau_median": {str(s.n): s.tau_median for s in stats_rows},
        "master_seed": cfg.seed,
        "config_hash": config_hash(cfg),
    })
    return EXIT_OK if all(gates.values()) else EXIT_GATE


def _cmd_rate_scan(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    report = rate_scan(cfg, threads=threads)
    from .experiments import MonteCarloStats

    write_csv(out / "rate_scan.csv", MonteCarloStats.header(), [r.row() for r in report.rows])
    payload = report.summary()
    payload["master_seed"] = cfg.seed
    payload["config_hash"] = config_hash(cfg)
    write_json(out / "rate_scan_summary.json", payload)
    return EXIT_OK if report.identity_gate_ok else EXIT_GATE


def _cmd_audit(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    n = cfg.n_list[0]
    gates = {}
    # concavity over seeded draws
    draws = min(cfg.reps, 100)
    conc = concavity_experiment(cfg, n, draws)
    gates["concavity_ok"] = conc.ok
    # deviation tail of the landscape value at twice the minimal trade-off
    p = build_problem(cfg, n)
    _, r_min = noiseless_fit(p)
    r = 2.0 * r_min if r_min > 0 else 1.0
    tail = landscape_tail_audit(p, r, max(cfg.reps, 100), cfg.seed, cfg_hash=config_hash(cfg))
    gates["landscape_tail_dominance_ok"] = tail.dominance_ok
    header, rows = tail.rows()
    write_csv(out / "landscape_tail.csv", header, rows)
    # envelope scaling on up to three sizes from the configured list
    sandwich = None
    if len(cfg.n_list) >= 3:
        triple = (cfg.n_list[0], cfg.n_list[len(cfg.n_list) // 2], cfg.n_list[-1])
        sandwich = sandwich_scaling_report(cfg, n_values=triple, threads=threads)
        gates["sandwich_scaling_ok"] = sandwich.ok
        from .experiments import SandwichFit

        write_csv(out / "sandwich.csv", SandwichFit.header(), [f.row() for f in sandwich.fits])
    payload = {
        "gates": gates,
        "concavity_worst_margin": conc.worst_margin,
        "tail_center": tail.center,
        "master_seed": cfg.seed,
        "config_hash": config_hash(cfg),
    }
    if sandwich is not None:
        payload["sandwich"] = sandwich.summary()
    write_json(out / "audit_summary.json", payload)
    return EXIT_OK if all(gates.values()) else EXIT_GATE


_COMMANDS = {
    "fit": _cmd_fit,
    "landscape": _cmd_landscape,
    "concentration": _cmd_concentration,
    "rate-scan": _cmd_rate_scan,
    "audit": _cmd_audit,
}


def run(subcommand: str, cfg: ExperimentConfig, threads: int = 1) -> int:
    """Dispatch one subcommand; returns the process exit code."""
    if subcommand not in _COMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    code = _COMMANDS[subcommand](cfg, out, threads)
    outputs = sorted(str(p) for p in out.glob("*.csv")) + sorted(
        str(p) for p in out.glob("*_summary.json")
    )
    write_manifest(out, cfg, subcommand, outputs)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="tradeoff-lab", description=__doc__)
    parser.add_argument("subcommand", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    seed = args.seed
    if seed is None and os.environ.get("TRADEOFF_LAB_SEED"):
        seed = int(os.environ["TRADEOFF_LAB_SEED"])
    out_dir = args.out or os.environ.get("TRADEOFF_LAB_OUT")

    try:
        cfg = parse_config(args.config).with_overrides(seed=seed, out_dir=out_dir)
        code = run(args.subcommand, cfg, threads=args.threads)
    except (ConfigError, ValueError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, GridTooNarrowError, NumericalError) as ex:
        print(f"numerical failure: {ex}", file=sys.stderr)
        return EXIT_NUMERICAL
    return code


if __name__ == "__main__":
    sys.exit(main())
