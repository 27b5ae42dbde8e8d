"""Penalized least-squares trade-off landscapes.

Library + CLI for the penalized least-squares estimator with a squared
seminorm penalty (smoothing splines, total variation), the random landscape
of its noise correlation over trade-off balls, closed-form concentration and
envelope bounds, and seeded Monte-Carlo experiments that verify the
concentration, concavity, identity, and convergence-rate claims at desk
scale.
"""

__version__ = "0.1.0"

from .bounds import (
    EntropyParams,
    dudley_upper,
    k_constants,
    landscape_deviation_tail,
    parabola_envelopes,
    rate_lambda,
    separation_event_bound,
    sudakov_lower,
    tau_ratio_tail,
)
from .config import ExperimentConfig, config_hash, emit_config, parse_config
from .errors import (
    ConvergenceError,
    DimensionError,
    GridTooNarrowError,
    InfeasibleRadiusError,
    InsufficientPointsError,
    InvalidGridError,
    NumericalError,
)
from .estimator import FitResult, Problem, fit, fit_quadratic, fit_tv, noiseless_fit
from .grids import DesignGrid, true_function_values, uniform_grid
from .landscape import (
    LandscapeCurve,
    MonteCarloSummary,
    NoiseDraw,
    default_radius_grid,
    draw_noise,
    estimate_r0,
    golden_section_max,
    landscape_curve,
    sup_correlation,
    verify_tau_equals_rstar,
)
from .penalty import (
    QuadraticSeminorm,
    Seminorm,
    TotalVariationSeminorm,
    eval_seminorm,
    spline_penalty_form,
    tv_value,
)
from .tvprox import tv_prox

__all__ = [
    "ConvergenceError",
    "DesignGrid",
    "DimensionError",
    "EntropyParams",
    "ExperimentConfig",
    "FitResult",
    "GridTooNarrowError",
    "InfeasibleRadiusError",
    "InsufficientPointsError",
    "InvalidGridError",
    "LandscapeCurve",
    "MonteCarloSummary",
    "NoiseDraw",
    "NumericalError",
    "Problem",
    "QuadraticSeminorm",
    "Seminorm",
    "TotalVariationSeminorm",
    "config_hash",
    "default_radius_grid",
    "draw_noise",
    "dudley_upper",
    "emit_config",
    "estimate_r0",
    "eval_seminorm",
    "fit",
    "fit_quadratic",
    "fit_tv",
    "golden_section_max",
    "k_constants",
    "landscape_curve",
    "landscape_deviation_tail",
    "noiseless_fit",
    "parabola_envelopes",
    "parse_config",
    "rate_lambda",
    "separation_event_bound",
    "spline_penalty_form",
    "sudakov_lower",
    "sup_correlation",
    "tau_ratio_tail",
    "true_function_values",
    "tv_prox",
    "tv_value",
    "uniform_grid",
    "verify_tau_equals_rstar",
]
