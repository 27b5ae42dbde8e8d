"""Random landscape of the noise correlation over trade-off balls.

For a noise draw eps, ``sup_correlation`` computes

    M_n(R) = sup { <eps, f - f0>/n : tau(f) <= R },

the landscape value H_n(R) = M_n(R) - R^2/2, its maximizer R_* over
[R_min, R_max], and Monte-Carlo estimates of the mean landscape and its
maximizer R_0.

Quadratic penalty: the trade-off ball is the ellipsoid
(f - f_min)' A (f - f_min) <= R^2 - R_min^2 with A = I/n + lam^2 K, so

    M_n(R) = <eps, f_min - f0>/n + sqrt(R^2 - R_min^2) * sqrt(eps' A^-1 eps)/n

and the stationarity of H_n gives R_*^2 = R_min^2 + eps' A^-1 eps / n^2.
Both identities are verified against generic solvers in the test suite
before being relied on here.

Total variation: the Lagrangian of the constrained sup reduces, after
completing the square, to the TV-penalized fit with pseudo-data f0 + t*eps
(t the reciprocal of twice the multiplier), so each evaluation is a scalar
root-find on t with the fused-lasso prox as the inner oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import ConvergenceError, GridTooNarrowError, InfeasibleRadiusError, NumericalError
from .estimator import Problem, _refined_shifted_solve, fit, noiseless_fit
from .penalty import QuadraticSeminorm, TotalVariationSeminorm
from .tvprox import tv_landscape_eval

GENERATOR_ALGORITHM = "philox4x64 / numpy SeedSequence(master_seed, spawn_key=(rep,))"
GSS_TOL = 1e-9
RADIUS_SLACK = 1e-12  # pre-condition slack on R >= R_min
TV_DUAL_GAP_LIMIT = 1e-8


@dataclass(frozen=True)
class NoiseDraw:
    """One reproducible standard-Gaussian noise vector.

    The generator is counter-based (Philox) keyed by (seed, rep_index), so
    the draw is identical no matter how reps are scheduled across threads.
    """

    epsilon: np.ndarray = field(repr=False)
    seed: int
    rep_index: int


def draw_noise(n: int, master_seed: int, rep_index: int = 0) -> NoiseDraw:
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(rep_index),))
    gen = np.random.Generator(np.random.Philox(ss))
    eps = gen.standard_normal(int(n))
    eps.flags.writeable = False
    return NoiseDraw(eps, int(master_seed), int(rep_index))


@dataclass(frozen=True)
class LandscapeCurve:
    """Sampled (R, M_n, H_n) triples for one noise draw plus the maximizer."""

    radii: np.ndarray
    m_values: np.ndarray
    h_values: np.ndarray
    r_star: float
    h_at_r_star: float


@dataclass(frozen=True)
class MonteCarloSummary:
    """Averaged landscape over independent reps with common radii."""

    reps: int
    radii: np.ndarray
    h_mean: np.ndarray
    h_stderr: np.ndarray
    r0_hat: float
    r_star_samples: np.ndarray
    tau_samples: np.ndarray
    fit_error_samples: np.ndarray
    penalty_samples: np.ndarray
    master_seed: int


def golden_section_max(fun, lo: float, hi: float, tol: float = GSS_TOL):
    """Maximize a concave function on [lo, hi]; returns (argmax, value)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    invphi2 = (3.0 - math.sqrt(5.0)) / 2.0
    a, b = float(lo), float(hi)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, fun(x)
    c = a + invphi2 * h
    d = a + invphi * h
    fc = fun(c)
    fd = fun(d)
    while h > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + invphi2 * h
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + invphi * h
            fd = fun(d)
    x = 0.5 * (a + b)
    return x, fun(x)


class _QuadraticLandscape:
    """Closed-form landscape evaluator for one (problem, noise draw) pair."""

    def __init__(self, p: Problem, eps: np.ndarray):
        self.p = p
        f_min, r_min = noiseless_fit(p)
        self.r_min = r_min
        self.center = float(eps @ (f_min - p.f0)) / p.n
        t = p.n * p.lam**2
        sol, _ = _refined_shifted_solve(p.seminorm, t, eps)
        # eps' A^-1 eps with A = I/n + lam^2 K equals n * eps'(I + n lam^2 K)^-1 eps
        self.s = math.sqrt(max(p.n * float(eps @ sol), 0.0))

    def m_at(self, r: float) -> float:
        dr2 = max(r * r - self.r_min**2, 0.0)
        return self.center + math.sqrt(dr2) * self.s / self.p.n

    def r_star_closed(self) -> float:
        return math.sqrt(self.r_min**2 + (self.s / self.p.n) ** 2)


class _TvLandscape:
    """Lagrangian landscape evaluator for the TV penalty.

    Each evaluation solves tau(f*(t)) = R for the pseudo-data scale t, where
    f*(t) is the TV^2-penalized fit of f0 + t * eps; the noise correlation of
    that fit is M_n(R).  Holds per-draw warm-start state (multiplier hints,
    last t roots), so one instance must be used sequentially for a single
    noise draw.
    """

    T_FLOOR = 1e-30

    def __init__(self, p: Problem, eps: np.ndarray):
        self.p = p
        self.eps = np.ascontiguousarray(eps)
        self._f0 = np.ascontiguousarray(p.f0)
        f_min, r_min = noiseless_fit(p)
        self.f_min = f_min
        self.r_min = r_min
        self.center = float(eps @ (f_min - p.f0)) / p.n
        self._mu_hint = 0.0
        self._buf = np.empty(p.n)
        self._last = None  # (t, tau, mu, corr, phi_resid)
        self.max_dual_gap = 0.0

    def _fit_at(self, t: float) -> float:
        hint_lo = 0.25 * self._mu_hint
        hint_hi = 4.0 * self._mu_hint
        tau, mu, corr, resid = tv_landscape_eval(
            self._f0, self.eps, t, self.p.lam, hint_lo, hint_hi, self._buf
        )
        if mu > 0.0:
            self._mu_hint = mu
        self._last = (t, tau, mu, corr, resid)
        return tau

    def m_at(self, r: float, t_bracket=None) -> float:
        if r <= self.r_min:
            return self.center
        lo, hi = self.T_FLOOR, None
        if t_bracket is not None:
            blo, bhi = t_bracket
            if blo > 0.0:
                lo = blo
            if bhi is not None and bhi > lo:
                hi = bhi
        g = lambda t: self._fit_at(t) - r
        t_root = None
        if hi is not None:
            try:
                t_root = brentq(g, lo, hi, xtol=1e-13, rtol=1e-15)
            except ValueError:  # stale bracket; fall through to expansion
                t_root = None
        if t_root is None:
            if self._fit_at(lo) > r:
                lo = self.T_FLOOR
            hi = max(lo * 4.0, 1.0)
            for _ in range(200):
                if self._fit_at(hi) >= r:
                    break
                hi *= 4.0
            else:
                raise ConvergenceError("could not bracket the trade-off radius in t")
            t_root = brentq(g, lo, hi, xtol=1e-13, rtol=1e-15)
        tau = self._fit_at(t_root)
        _, _, mu, corr, phi_resid = self._last
        nu = 0.5 / t_root
        tvf = self.p.seminorm.value(self._buf)
        gap = nu * abs(r * r - tau * tau) + nu * phi_resid * tvf
        self.max_dual_gap = max(self.max_dual_gap, gap)
        if gap > TV_DUAL_GAP_LIMIT:
            raise ConvergenceError(
                f"TV landscape dual gap {gap:.3e} above {TV_DUAL_GAP_LIMIT}", residual=gap
            )
        return corr


def _make_evaluator(p: Problem, eps: np.ndarray):
    if isinstance(p.seminorm, QuadraticSeminorm):
        return _QuadraticLandscape(p, eps)
    if isinstance(p.seminorm, TotalVariationSeminorm):
        return _TvLandscape(p, eps)
    raise TypeError(f"unsupported seminorm {type(p.seminorm).__name__}")


def _check_radius(p: Problem, r: float, r_min: float):
    if r < r_min - RADIUS_SLACK - 1e-12 * max(r_min, 1.0):
        raise InfeasibleRadiusError(f"radius {r} below minimal trade-off {r_min}")


def sup_correlation(p: Problem, eps: NoiseDraw, r: float) -> float:
    """M_n(R): supremum of <eps, f - f0>/n over the trade-off ball of radius R."""
    e = p.grid.check_vector(eps.epsilon, "epsilon")
    _, r_min = noiseless_fit(p)
    _check_radius(p, r, r_min)
    if not np.any(e):
        return 0.0
    ev = _make_evaluator(p, e)
    return ev.m_at(max(float(r), r_min))


def landscape_curve(p: Problem, eps: NoiseDraw, radii, gss_tol: float = GSS_TOL) -> LandscapeCurve:
    """Evaluate M_n and H_n on a radius grid and maximize H_n.

    The same noise vector is used across all radii (common random numbers),
    so the curve is a coherent concave sample path and the maximizer R_* is
    well defined.  R_* is located by golden-section search over
    [radii[0], radii[-1]]; a maximizer at the right endpoint raises
    ``GridTooNarrowError``.
    """
    e = p.grid.check_vector(eps.epsilon, "epsilon")
    radii = np.asarray(radii, dtype=float)
    _, r_min = noiseless_fit(p)
    if radii.ndim != 1 or radii.size < 4:
        raise ValueError("need a 1-d radius grid with at least 4 points")
    if np.any(np.diff(radii) <= 0.0):
        raise ValueError("radii must be strictly increasing")
    _check_radius(p, radii[0], r_min)

    ev = _make_evaluator(p, e)
    m_values = np.empty_like(radii)
    if isinstance(ev, _QuadraticLandscape):
        for j, r in enumerate(radii):
            m_values[j] = ev.m_at(r)
        h_fun = lambda r: ev.m_at(r) - 0.5 * r * r
    else:
        t_roots = np.zeros_like(radii)
        t_prev = 0.0
        for j, r in enumerate(radii):
            m_values[j] = ev.m_at(r, t_bracket=(t_prev, None) if t_prev > 0 else None)
            t_prev = ev._last[0] if ev._last is not None else 0.0
            t_roots[j] = t_prev

        def h_fun(r):
            j = int(np.searchsorted(radii, r))
            lo = t_roots[j - 1] if j > 0 else 0.0
            hi = t_roots[j] if j < radii.size else None
            return ev.m_at(r, t_bracket=(lo, hi)) - 0.5 * r * r

    scale = max(abs(m_values[-1]), abs(m_values[0]), 1.0)
    if np.any(np.diff(m_values) < -1e-8 * scale):
        raise NumericalError("sup correlation is not monotone on the radius grid")

    h_values = m_values - 0.5 * radii**2
    r_star, h_star = golden_section_max(h_fun, radii[0], radii[-1], tol=gss_tol)
    if r_star >= radii[-1] - 4.0 * gss_tol:
        raise GridTooNarrowError(
            f"H_n maximizer {r_star:.6g} at the right endpoint {radii[-1]:.6g}; widen the grid"
        )
    return LandscapeCurve(radii, m_values, h_values, float(r_star), float(h_star))


def verify_tau_equals_rstar(p: Problem, eps: NoiseDraw, radii=None) -> dict:
    """Compare tau(fhat) with R_* through two independent pipelines.

    tau(fhat) comes from the penalized fit of Y = f0 + eps; R_* from the
    landscape maximization.  Returns {"tau", "r_star", "abs_diff"}.
    """
    if radii is None:
        radii = default_radius_grid(p)
    result = fit(p, p.f0 + eps.epsilon)
    curve = landscape_curve(p, eps, radii)
    return {
        "tau": result.tau,
        "r_star": curve.r_star,
        "abs_diff": abs(result.tau - curve.r_star),
    }


def summarize_curves(
    radii,
    h_rows,
    r_star_samples,
    tau_samples,
    fit_error_samples,
    penalty_samples,
    master_seed: int,
    gss_tol: float = GSS_TOL,
) -> MonteCarloSummary:
    """Aggregate per-rep landscape curves into the Monte-Carlo summary.

    The mean curve is interpolated with a cubic spline and maximized by
    golden-section search; a maximizer within tolerance of either grid
    endpoint raises ``GridTooNarrowError``.
    """
    radii = np.asarray(radii, dtype=float)
    h_rows = np.asarray(h_rows, dtype=float)
    reps = h_rows.shape[0]
    if reps < 2:
        raise ValueError("need at least 2 reps")
    h_mean = h_rows.mean(axis=0)
    h_stderr = h_rows.std(axis=0, ddof=1) / math.sqrt(reps)
    interp = CubicSpline(radii, h_mean)
    r0_hat, _ = golden_section_max(lambda r: float(interp(r)), radii[0], radii[-1], tol=gss_tol)
    if r0_hat >= radii[-1] - 4.0 * gss_tol:
        raise GridTooNarrowError("mean-landscape maximizer at the right endpoint; widen the grid")
    if r0_hat <= radii[0] + 4.0 * gss_tol:
        raise GridTooNarrowError("mean-landscape maximizer at the left endpoint; widen the grid")
    return MonteCarloSummary(
        reps=reps,
        radii=radii,
        h_mean=h_mean,
        h_stderr=h_stderr,
        r0_hat=float(r0_hat),
        r_star_samples=np.asarray(r_star_samples, dtype=float),
        tau_samples=np.asarray(tau_samples, dtype=float),
        fit_error_samples=np.asarray(fit_error_samples, dtype=float),
        penalty_samples=np.asarray(penalty_samples, dtype=float),
        master_seed=int(master_seed),
    )


def estimate_r0(
    p: Problem,
    reps: int,
    radii,
    master_seed: int,
    threads: int = 1,
    gss_tol: float = GSS_TOL,
) -> MonteCarloSummary:
    """Monte-Carlo estimate of the mean landscape and its maximizer R_0.

    One noise draw per rep is shared across the whole radius grid (common
    random numbers).  Reps are independent; with ``threads > 1`` they run on
    a thread pool, and results are written into preallocated per-rep slots so
    the output is bit-identical for any thread count.
    """
    reps = int(reps)
    if reps < 2:
        raise ValueError("need at least 2 reps")
    radii = np.asarray(radii, dtype=float)
    n = p.n
    noiseless_fit(p)  # populate shared cache before any threads start

    h_rows = np.empty((reps, radii.size))
    r_star = np.empty(reps)
    taus = np.empty(reps)
    fit_errors = np.empty(reps)
    penalties = np.empty(reps)

    def one_rep(rep: int):
        draw = draw_noise(n, master_seed, rep)
        curve = landscape_curve(p, draw, radii, gss_tol=gss_tol)
        res = fit(p, p.f0 + draw.epsilon)
        h_rows[rep] = curve.h_values
        r_star[rep] = curve.r_star
        taus[rep] = res.tau
        fit_errors[rep] = res.fit_error
        penalties[rep] = res.penalty

    if threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            list(pool.map(one_rep, range(reps)))
    else:
        for rep in range(reps):
            one_rep(rep)

    return summarize_curves(
        radii, h_rows, r_star, taus, fit_errors, penalties, master_seed, gss_tol=gss_tol
    )


def default_alpha(p: Problem) -> float:
    """Entropy exponent matching the penalty: 1/m for splines, 1 for TV."""
    if isinstance(p.seminorm, QuadraticSeminorm):
        return 1.0 / p.seminorm.order
    return 1.0


def default_radius_grid(p: Problem, alpha: float | None = None, size: int = 64) -> np.ndarray:
    """Radius grid [R_min, R_min + 8*K2] with geometric offsets.

    The mean landscape is sandwiched between parabolas whose maximizers lie
    below 2*K2 (default envelope constants), so an 8*K2 span leaves a wide
    margin before the right-endpoint guard trips.
    """
    from .bounds import EntropyParams, k_constants

    if size < 4:
        raise ValueError("radius grid needs at least 4 points")
    if alpha is None:
        alpha = default_alpha(p)
    _, r_min = noiseless_fit(p)
    _, k2 = k_constants(EntropyParams(alpha=alpha), p.n, p.lam)
    span = 8.0 * k2
    offsets = span * np.geomspace(1.0 / 256.0, 1.0, size - 1)
    return np.concatenate([[r_min], r_min + offsets])
