"""Desk-scale Monte-Carlo verification of the concentration and rate claims.

Every experiment is a deterministic pure function of (config, master seed):
noise streams are counter-based per rep, aggregation is order-independent,
and re-running any function with the same inputs reproduces its report
exactly, independent of the thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .bounds import (
    EntropyParams,
    k_constants,
    landscape_deviation_tail,
    rate_lambda,
    tau_ratio_tail,
)
from .config import ExperimentConfig, config_hash
from .estimator import Problem
from .grids import true_function_values, uniform_grid
from .landscape import (
    NoiseDraw,
    default_radius_grid,
    draw_noise,
    estimate_r0,
    landscape_curve,
    sup_correlation,
)
from .penalty import TotalVariationSeminorm, spline_penalty_form

# tolerances for the tau(fhat) = R_* identity gate: the TV pipelines are
# iterative on both sides, so their gate is looser
IDENTITY_TOL = {"spline_m": 1e-6, "tv": 1e-4}
CONCAVITY_TOL = {"spline_m": -1e-9, "tv": -1e-6}


def build_problem(cfg: ExperimentConfig, n: int, lam: float | None = None) -> Problem:
    """Assemble the regression problem for one sample size of a scenario."""
    grid = uniform_grid(n)
    f0 = true_function_values(cfg.f0, grid)
    if lam is None:
        lam = rate_lambda(n, cfg.alpha, cfg.lambda_scale)
    if cfg.scenario == "spline_m":
        seminorm = spline_penalty_form(grid, cfg.m)
    else:
        seminorm = TotalVariationSeminorm(n)
    return Problem(grid=grid, f0=f0, lam=lam, seminorm=seminorm)


def radius_grid_for(cfg: ExperimentConfig, p: Problem) -> np.ndarray:
    return default_radius_grid(p, alpha=cfg.alpha, size=cfg.radius_grid_size)


@dataclass(frozen=True)
class TailTable:
    """Empirical tail frequencies next to a theoretical bound."""

    kind: str
    n: int
    reps: int
    center: float  # r0_hat for the ratio tail, mean landscape value for H_n
    thresholds: np.ndarray
    empirical: np.ndarray
    bound: np.ndarray
    stderr: np.ndarray
    dominance_ok: bool
    master_seed: int
    config_hash: str

    def rows(self):
        header = ("threshold", "empirical_freq", "bound", "binom_stderr",
                  "n", "reps", "center", "master_seed", "config_hash")
        return header, [
            (t, e, b, s, self.n, self.reps, self.center, self.master_seed, self.config_hash)
            for t, e, b, s in zip(self.thresholds, self.empirical, self.bound, self.stderr)
        ]


def _dominance(empirical, bound, stderr, cutoff: float) -> bool:
    mask = bound < cutoff
    return bool(np.all(empirical[mask] <= bound[mask] + 3.0 * stderr[mask]))


def concentration_experiment(
    cfg: ExperimentConfig, n: int, threads: int = 1
) -> tuple[TailTable, "MonteCarloStats"]:
    """Empirical tail of |tau(fhat)/r0_hat - 1| against the ratio tail bound.

    The Monte-Carlo maximizer r0_hat stands in for the unknown deterministic
    center; its standard error is part of the returned per-run statistics.
    Dominance (empirical <= bound + 3 binomial SEs wherever the bound is
    non-vacuous) is recorded in the table.
    """
    if cfg.reps < 50:
        raise ValueError("concentration runs need reps >= 50")
    p = build_problem(cfg, n)
    radii = radius_grid_for(cfg, p)
    mc = estimate_r0(p, cfg.reps, radii, cfg.seed, threads=threads)
    devs = np.abs(mc.tau_samples / mc.r0_hat - 1.0)
    xs = np.round(np.arange(1, 21) * 0.05, 10)
    emp = np.array([float(np.mean(devs >= x)) for x in xs])
    bnd = np.array([tau_ratio_tail(x, n, mc.r0_hat) for x in xs])
    se = np.sqrt(bnd * (1.0 - bnd) / cfg.reps)
    table = TailTable(
        kind="tau_ratio",
        n=n,
        reps=cfg.reps,
        center=mc.r0_hat,
        thresholds=xs,
        empirical=emp,
        bound=bnd,
        stderr=se,
        dominance_ok=_dominance(emp, bnd, se, cutoff=1.0),
        master_seed=cfg.seed,
        config_hash=config_hash(cfg),
    )
    return table, _mc_stats(cfg, n, p, mc)


@dataclass(frozen=True)
class MonteCarloStats:
    """Per-(scenario, n) summary row used by the rate scan."""

    n: int
    lam: float
    r_min: float
    r0_hat: float
    tau_median: float
    tau_q25: float
    tau_q75: float
    fit_error_median: float
    penalty_median: float
    rmin_over_tau_f0: float
    identity_max_diff: float
    master_seed: int
    config_hash: str

    @staticmethod
    def header():
        return ("n", "lambda", "r_min", "r0_hat", "tau_median", "tau_q25", "tau_q75",
                "fit_error_median", "penalty_median", "rmin_over_tau_f0",
                "identity_max_diff", "master_seed", "config_hash")

    def row(self):
        return (self.n, self.lam, self.r_min, self.r0_hat, self.tau_median, self.tau_q25,
                self.tau_q75, self.fit_error_median, self.penalty_median,
                self.rmin_over_tau_f0, self.identity_max_diff, self.master_seed,
                self.config_hash)


def _mc_stats(cfg, n, p: Problem, mc) -> MonteCarloStats:
    from .estimator import noiseless_fit

    _, r_min = noiseless_fit(p)
    tau_f0 = p.lam * p.seminorm.value(p.f0)  # tau at the true function
    q25, med, q75 = np.quantile(mc.tau_samples, [0.25, 0.5, 0.75])
    return MonteCarloStats(
        n=n,
        lam=p.lam,
        r_min=r_min,
        r0_hat=mc.r0_hat,
        tau_median=float(med),
        tau_q25=float(q25),
        tau_q75=float(q75),
        fit_error_median=float(np.median(mc.fit_error_samples)),
        penalty_median=float(np.median(mc.penalty_samples)),
        rmin_over_tau_f0=r_min / tau_f0 if tau_f0 > 0 else math.inf,
        identity_max_diff=float(np.max(np.abs(mc.tau_samples - mc.r_star_samples))),
        master_seed=cfg.seed,
        config_hash=config_hash(cfg),
    )


def _log_log_slope(ns, values):
    if len(ns) < 3:
        raise ValueError("need at least 3 sample sizes for a slope")
    res = stats.linregress(np.log(np.asarray(ns, float)), np.log(np.asarray(values, float)))
    df = len(ns) - 2
    halfwidth = stats.t.ppf(0.975, df) * res.stderr
    return float(res.slope), float(res.slope - halfwidth), float(res.slope + halfwidth)


@dataclass(frozen=True)
class RateScanReport:
    rows: tuple[MonteCarloStats, ...]
    target_slope: float
    fitted_slope_r0: float
    ci_low: float
    ci_high: float
    fitted_slope_tau: float
    tau_ci_low: float
    tau_ci_high: float
    fitted_slope_fit_error: float
    penalty_median_ratio: float
    identity_gate_ok: bool
    identity_tol: float
    rmin_ratio_drift: float
    rmin_ratio_ok: bool

    def summary(self) -> dict:
        return {
            "target_slope": self.target_slope,
            "fitted_slope_r0": self.fitted_slope_r0,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "fitted_slope_tau": self.fitted_slope_tau,
            "tau_ci_low": self.tau_ci_low,
            "tau_ci_high": self.tau_ci_high,
            "fitted_slope_fit_error": self.fitted_slope_fit_error,
            "penalty_median_ratio": self.penalty_median_ratio,
            "identity_gate_ok": self.identity_gate_ok,
            "identity_tol": self.identity_tol,
            "rmin_ratio_drift": self.rmin_ratio_drift,
            "rmin_ratio_ok": self.rmin_ratio_ok,
        }


def rate_scan(cfg: ExperimentConfig, threads: int = 1) -> RateScanReport:
    """Log-log slopes of r0_hat and median tau(fhat) against sample size.

    lambda follows rate_lambda(n, alpha, lambda_scale) per sample size; the
    target slope is -1/(2+alpha).  Also reports the fit-error slope (upper
    bound check), the spread of median fitted penalties (boundedness check),
    the worst tau-vs-R_* identity violation, and the drift of the ratio
    R_min / tau(f0) (the well-tuned-penalty audit, flagged above factor 4).
    """
    if len(cfg.n_list) < 3:
        raise ValueError("rate scan needs at least 3 sample sizes")
    rows = []
    for n in cfg.n_list:
        p = build_problem(cfg, n)
        radii = radius_grid_for(cfg, p)
        mc = estimate_r0(p, cfg.reps, radii, cfg.seed, threads=threads)
        rows.append(_mc_stats(cfg, n, p, mc))
    ns = [r.n for r in rows]
    slope_r0, lo, hi = _log_log_slope(ns, [r.r0_hat for r in rows])
    slope_tau, tlo, thi = _log_log_slope(ns, [r.tau_median for r in rows])
    slope_fe, _, _ = _log_log_slope(ns, [r.fit_error_median for r in rows])
    med_pens = [r.penalty_median for r in rows]
    ratios = [r.rmin_over_tau_f0 for r in rows]
    drift = max(ratios) / min(ratios) if min(ratios) > 0 else math.inf
    tol = IDENTITY_TOL[cfg.scenario]
    return RateScanReport(
        rows=tuple(rows),
        target_slope=-1.0 / (2.0 + cfg.alpha),
        fitted_slope_r0=slope_r0,
        ci_low=lo,
        ci_high=hi,
        fitted_slope_tau=slope_tau,
        tau_ci_low=tlo,
        tau_ci_high=thi,
        fitted_slope_fit_error=slope_fe,
        penalty_median_ratio=max(med_pens) / min(med_pens),
        identity_gate_ok=all(r.identity_max_diff <= tol for r in rows),
        identity_tol=tol,
        rmin_ratio_drift=drift,
        rmin_ratio_ok=drift <= 4.0,
    )


@dataclass(frozen=True)
class ConcavityReport:
    ok: bool
    worst_margin: float
    margins: np.ndarray


def concavity_margins(radii, h_values) -> np.ndarray:
    """Chord margins H(R_j) - interpolated chord value at interior grid points."""
    radii = np.asarray(radii, float)
    h = np.asarray(h_values, float)
    left, mid, right = h[:-2], h[1:-1], h[2:]
    r_left, r_mid, r_right = radii[:-2], radii[1:-1], radii[2:]
    w = (r_right - r_mid) / (r_right - r_left)
    chord = w * left + (1.0 - w) * right
    return mid - chord


def concavity_audit(p: Problem, eps: NoiseDraw, radii, tol: float | None = None) -> ConcavityReport:
    """Check discrete concavity of H_n along the radius grid for one draw."""
    if tol is None:
        tol = -1e-9 if not isinstance(p.seminorm, TotalVariationSeminorm) else -1e-6
    curve = landscape_curve(p, eps, radii)
    margins = concavity_margins(curve.radii, curve.h_values)
    worst = float(np.min(margins))
    return ConcavityReport(ok=worst >= tol, worst_margin=worst, margins=margins)


def concavity_experiment(cfg: ExperimentConfig, n: int, draws: int) -> ConcavityReport:
    """Worst concavity margin over seeded draws of one scenario size."""
    p = build_problem(cfg, n)
    radii = radius_grid_for(cfg, p)
    tol = CONCAVITY_TOL[cfg.scenario]
    worst = math.inf
    all_margins = []
    for rep in range(draws):
        rep_report = concavity_audit(p, draw_noise(n, cfg.seed, rep), radii, tol=tol)
        worst = min(worst, rep_report.worst_margin)
        all_margins.append(rep_report.margins)
    return ConcavityReport(ok=worst >= tol, worst_margin=worst, margins=np.array(all_margins))


def landscape_tail_audit(
    p: Problem, r: float, reps: int, master_seed: int, t_grid=None, cfg_hash: str = ""
) -> TailTable:
    """Empirical tail of |H_n(R) - mean H_n(R)| against the deviation bound.

    The unknown mean landscape is replaced by the sample mean over the same
    reps; dominance is required wherever the bound is below 1/2.
    """
    if reps < 2:
        raise ValueError("need at least 2 reps")
    n = p.n
    h = np.empty(reps)
    for rep in range(reps):
        draw = draw_noise(n, master_seed, rep)
        h[rep] = sup_correlation(p, draw, r) - 0.5 * r * r
    h_bar = float(np.mean(h))
    devs = np.abs(h - h_bar)
    if t_grid is None:
        t_grid = (r / math.sqrt(n)) * np.geomspace(0.5, 8.0, 24)
    t_grid = np.asarray(t_grid, float)
    emp = np.array([float(np.mean(devs >= t)) for t in t_grid])
    bnd = np.array([landscape_deviation_tail(t, n, r) for t in t_grid])
    se = np.sqrt(bnd * (1.0 - bnd) / reps)
    return TailTable(
        kind="landscape_deviation",
        n=n,
        reps=reps,
        center=h_bar,
        thresholds=t_grid,
        empirical=emp,
        bound=bnd,
        stderr=se,
        dominance_ok=_dominance(emp, bnd, se, cutoff=0.5),
        master_seed=master_seed,
        config_hash=cfg_hash,
    )


@dataclass(frozen=True)
class SandwichFit:
    """Envelope constants fitted to the empirical mean landscape at one n."""

    n: int
    lam: float
    k1_fitted: float
    k2_fitted: float
    k1_theory: float
    k2_theory: float
    master_seed: int
    config_hash: str

    @staticmethod
    def header():
        return ("n", "lambda", "k1_fitted", "k2_fitted", "k1_theory", "k2_theory",
                "master_seed", "config_hash")

    def row(self):
        return (self.n, self.lam, self.k1_fitted, self.k2_fitted, self.k1_theory,
                self.k2_theory, self.master_seed, self.config_hash)


def sandwich_audit(cfg: ExperimentConfig, n: int, lam: float, threads: int = 1) -> SandwichFit:
    """Fit the parabola-envelope constants to the empirical mean landscape.

    k2_fitted is the smallest K with h_mean(R) <= K R - R^2/2 on the whole
    grid; k1_fitted the largest K with h_mean(R) >= K R - R^2/2 on the upper
    half of the grid (near R_min the ratio (h_mean + R^2/2)/R degenerates to
    Monte-Carlo noise around 0, so the lower envelope is fitted away from
    the left endpoint).
    """
    p = build_problem(cfg, n, lam=lam)
    radii = radius_grid_for(cfg, p)
    mc = estimate_r0(p, cfg.reps, radii, cfg.seed, threads=threads)
    m_bar = mc.h_mean + 0.5 * mc.radii**2
    pos = mc.radii > 0
    ratios = m_bar[pos] / mc.radii[pos]
    k2_fit = float(np.max(ratios))
    upper = mc.radii >= mc.radii[0] + 0.25 * (mc.radii[-1] - mc.radii[0])
    k1_fit = float(np.min(m_bar[upper] / mc.radii[upper]))
    k1_th, k2_th = k_constants(EntropyParams(alpha=cfg.alpha), n, lam)
    return SandwichFit(n=n, lam=lam, k1_fitted=k1_fit, k2_fitted=k2_fit,
                       k1_theory=k1_th, k2_theory=k2_th,
                       master_seed=cfg.seed, config_hash=config_hash(cfg))


@dataclass(frozen=True)
class SandwichScalingReport:
    fits: tuple[SandwichFit, ...]
    lam: float
    worst_rel_err: float
    ok: bool

    def summary(self) -> dict:
        return {
            "lambda_fixed": self.lam,
            "k2_fitted": [f.k2_fitted for f in self.fits],
            "n_values": [f.n for f in self.fits],
            "worst_rel_err": self.worst_rel_err,
            "scaling_ok": self.ok,
        }


def sandwich_scaling_report(
    cfg: ExperimentConfig, n_values=(256, 1024, 4096), rel_tol: float = 0.25, threads: int = 1
) -> SandwichScalingReport:
    """Check that the fitted upper envelope constant scales as n^(-1/2).

    lambda is held fixed across sample sizes (the theoretical constants scale
    as (n lam^alpha)^(-1/2), which reduces to n^(-1/2) at fixed lambda).
    """
    n_values = tuple(int(v) for v in n_values)
    lam = rate_lambda(n_values[len(n_values) // 2], cfg.alpha, cfg.lambda_scale)
    fits = tuple(sandwich_audit(cfg, n, lam, threads=threads) for n in n_values)
    base = fits[0]
    worst = 0.0
    for f in fits[1:]:
        expected = base.k2_fitted * math.sqrt(base.n / f.n)
        worst = max(worst, abs(f.k2_fitted - expected) / expected)
    return SandwichScalingReport(fits=fits, lam=lam, worst_rel_err=worst, ok=worst <= rel_tol)
