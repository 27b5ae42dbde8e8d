"""Experiment configuration: parsing, validation, canonical serialization.

Config files are flat ``key = value`` documents; ``#`` starts a comment and
blank lines are ignored.  Recognized keys:

    scenario          "spline_m" or "tv"                      (required)
    m                 spline order >= 2; spline_m only
    f0                "sin2pi" | "poly3" | "step3"
    n_list            comma-separated strictly increasing sample sizes
    reps              Monte-Carlo repetitions
    lambda_scale      scale c in lambda = c * n^(-1/(2+alpha))
    alpha             entropy exponent in (0, 2)
    seed              master seed (64-bit integer)
    radius_grid_size  points in the radius grid (>= 4)
    out_dir           output directory

Unknown keys are rejected.  ``parse_config(emit_config(cfg))`` round-trips.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

DEFAULT_N_LIST = (128, 256, 512, 1024, 2048, 4096, 8192)

_F0_ALIASES = {"step": "step3"}
_VALID_F0 = {"sin2pi", "poly3", "step3"}
_VALID_SCENARIOS = {"spline_m", "tv"}
_KEYS = {
    "scenario",
    "m",
    "f0",
    "n_list",
    "reps",
    "lambda_scale",
    "alpha",
    "seed",
    "radius_grid_size",
    "out_dir",
}


class ConfigError(ValueError):
    """Invalid configuration file or field, with location when available."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    m: int | None = None
    f0: str | None = None
    n_list: tuple[int, ...] = DEFAULT_N_LIST
    reps: int = 100
    lambda_scale: float = 1.0
    alpha: float | None = None
    seed: int = 0
    radius_grid_size: int = 64
    out_dir: str = "out"

    def __post_init__(self):
        if self.scenario not in _VALID_SCENARIOS:
            raise ConfigError(f"scenario must be one of {sorted(_VALID_SCENARIOS)}")
        if self.scenario == "spline_m":
            m = 2 if self.m is None else int(self.m)
            if m < 2:
                raise ConfigError("m: spline order must be >= 2")
            object.__setattr__(self, "m", m)
            f0 = self.f0 or "sin2pi"
        else:
            if self.m is not None:
                raise ConfigError("m: incompatible with scenario=tv")
            f0 = self.f0 or "step3"
        f0 = _F0_ALIASES.get(f0, f0)
        if f0 not in _VALID_F0:
            raise ConfigError(f"f0 must be one of {sorted(_VALID_F0)}")
        object.__setattr__(self, "f0", f0)

        alpha = self.alpha
        if alpha is None:
            alpha = 1.0 / self.m if self.scenario == "spline_m" else 1.0
        if not 0.0 < alpha < 2.0:
            raise ConfigError(f"alpha must lie in (0, 2), got {alpha}")
        object.__setattr__(self, "alpha", float(alpha))

        nl = tuple(int(v) for v in self.n_list)
        if len(nl) == 0:
            raise ConfigError("n_list must not be empty")
        if any(b <= a for a, b in zip(nl, nl[1:])):
            raise ConfigError("n_list must be strictly increasing")
        if nl[0] < 3:
            raise ConfigError("n_list entries must be >= 3")
        object.__setattr__(self, "n_list", nl)

        if self.reps < 2:
            raise ConfigError("reps must be >= 2")
        if not self.lambda_scale > 0:
            raise ConfigError("lambda_scale must be positive")
        if self.radius_grid_size < 4:
            raise ConfigError("radius_grid_size must be >= 4")
        object.__setattr__(self, "seed", int(self.seed))

    def with_overrides(self, seed=None, out_dir=None) -> "ExperimentConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        if out_dir is not None:
            cfg = replace(cfg, out_dir=str(out_dir))
        return cfg


def _parse_value(key: str, raw: str, lineno: int):
    def fail(msg):
        raise ConfigError(f"line {lineno}: {msg}")

    try:
        if key == "scenario" or key == "f0" or key == "out_dir":
            return raw
        if key == "m" or key == "reps" or key == "radius_grid_size":
            return int(raw)
        if key == "seed":
            return int(raw, 0)
        if key == "lambda_scale" or key == "alpha":
            return float(raw)
        if key == "n_list":
            return tuple(int(part.strip()) for part in raw.split(",") if part.strip())
    except ValueError:
        fail(f"cannot parse value {raw!r} for key {key!r}")
    raise AssertionError(key)


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}: line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _KEYS:
            raise ConfigError(f"{source}: line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}: line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _parse_value(key, raw, lineno)
        except ConfigError as ex:
            raise ConfigError(f"{source}: {ex}") from None
    if "scenario" not in values:
        raise ConfigError(f"{source}: missing required key 'scenario'")
    try:
        return ExperimentConfig(**values)
    except ConfigError as ex:
        raise ConfigError(f"{source}: {ex}") from None


def parse_config(path) -> ExperimentConfig:
    """Load and validate a config file; errors carry the file and line."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    return parse_config_text(text, source=str(path))


def emit_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; parse_config_text(emit_config(cfg)) == cfg."""
    lines = [f"scenario = {cfg.scenario}"]
    if cfg.scenario == "spline_m":
        lines.append(f"m = {cfg.m}")
    lines += [
        f"f0 = {cfg.f0}",
        "n_list = " + ",".join(str(v) for v in cfg.n_list),
        f"reps = {cfg.reps}",
        f"lambda_scale = {cfg.lambda_scale!r}",
        f"alpha = {cfg.alpha!r}",
        f"seed = {cfg.seed}",
        f"radius_grid_size = {cfg.radius_grid_size}",
        f"out_dir = {cfg.out_dir}",
    ]
    return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    """Stable short hash of the canonical config text."""
    return hashlib.sha256(emit_config(cfg).encode()).hexdigest()[:16]
