"""The taut-string prox is certified against an exact enumeration oracle."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tradeoff_lab.tvprox import tv_landscape_eval, tv_prox, tv_prox_dual_gap


def fused_lasso_objective(y, f, gam):
    return 0.5 * np.sum((y - f) ** 2) + gam * np.sum(np.abs(np.diff(f)))


def exact_dual_oracle(y, gam):
    """Exact fused-lasso solution for small n by dual active-set enumeration.

    The dual is a box-constrained least-squares in the arc variables z:
    minimize 0.5 ||y - D'z||^2 over |z_i| <= gam, with f = y - D'z.  Every
    sign pattern (z_i pinned at -gam, +gam, or free) yields one candidate;
    the KKT-consistent one is the solution.
    """
    n = len(y)
    if n == 1:
        return y.copy()
    d = np.zeros((n - 1, n))
    for i in range(n - 1):
        d[i, i] = -1.0
        d[i, i + 1] = 1.0
    best, bestobj = None, np.inf
    for pattern in itertools.product((-1, 0, 1), repeat=n - 1):
        fixed = [i for i, s in enumerate(pattern) if s != 0]
        free = [i for i, s in enumerate(pattern) if s == 0]
        z = np.zeros(n - 1)
        for i in fixed:
            z[i] = gam * pattern[i]
        if free:
            df = d[free]
            rhs = df @ (y - d[fixed].T @ z[fixed] if fixed else y)
            try:
                zf = np.linalg.solve(df @ df.T, rhs)
            except np.linalg.LinAlgError:
                continue
            if np.any(np.abs(zf) > gam * (1 + 1e-12)):
                continue
            z[free] = zf
        f = y - d.T @ z
        jumps = d @ f
        if any(pattern[i] * jumps[i] < -1e-10 for i in fixed):
            continue
        obj = fused_lasso_objective(y, f, gam)
        if obj < bestobj - 1e-15:
            bestobj, best = obj, f
    return best


def test_matches_exact_oracle_small_n():
    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(300):
        n = int(rng.integers(1, 9))
        y = rng.normal(size=n) * rng.uniform(0.1, 5.0)
        gam = float(rng.uniform(0.001, 3.0))
        got = tv_prox(y, gam)
        want = exact_dual_oracle(y, gam)
        worst = max(worst, float(np.max(np.abs(got - want))))
    assert worst < 1e-9


def test_objective_not_worse_than_cvxpy():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(7)
    for _ in range(15):
        n = int(rng.integers(2, 120))
        y = rng.normal(size=n) * 3.0
        gam = float(rng.uniform(0.01, 10.0))
        f = tv_prox(y, gam)
        x = cp.Variable(n)
        prob = cp.Problem(
            cp.Minimize(0.5 * cp.sum_squares(y - x) + gam * cp.norm1(cp.diff(x)))
        )
        prob.solve(solver=cp.CLARABEL)
        assert fused_lasso_objective(y, f, gam) <= prob.value + 1e-7
        assert np.max(np.abs(f - x.value)) < 1e-3  # limited by cvxpy accuracy


def test_dual_certificate_zero_for_solutions():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(2, 200))
        y = rng.normal(size=n)
        gam = float(rng.uniform(0.01, 2.0))
        f = tv_prox(y, gam)
        assert tv_prox_dual_gap(y, gam, f) < 1e-10
        # perturbed vectors are flagged
        assert tv_prox_dual_gap(y, gam, f + 0.1) > 1e-3


def test_zero_penalty_returns_input():
    y = np.array([3.0, -1.0, 2.0])
    assert np.array_equal(tv_prox(y, 0.0), y)


def test_mean_is_preserved():
    rng = np.random.default_rng(2)
    for _ in range(20):
        y = rng.normal(size=int(rng.integers(2, 300)))
        f = tv_prox(y, float(rng.uniform(0.01, 5.0)))
        assert abs(np.sum(f) - np.sum(y)) < 1e-8 * max(1.0, np.abs(y).sum())


def test_large_penalty_gives_flat_mean():
    rng = np.random.default_rng(3)
    y = rng.normal(size=40)
    f = tv_prox(y, 1e6)
    assert np.max(np.abs(f - np.mean(y))) < 1e-9


@settings(deadline=None, max_examples=60)
@given(
    st.lists(st.floats(-50, 50), min_size=1, max_size=7),
    st.floats(1e-3, 10.0),
)
def test_hypothesis_matches_oracle(vals, gam):
    y = np.asarray(vals, dtype=float)
    got = tv_prox(y, gam)
    want = exact_dual_oracle(y, gam)
    assert np.max(np.abs(got - want)) < 1e-8 * max(1.0, np.abs(y).max())


@settings(deadline=None, max_examples=40)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 4.0), st.floats(1.2, 6.0))
def test_tv_monotone_in_penalty(seed, gam, factor):
    y = np.random.default_rng(seed).normal(size=30)
    tv1 = np.sum(np.abs(np.diff(tv_prox(y, gam))))
    tv2 = np.sum(np.abs(np.diff(tv_prox(y, gam * factor))))
    assert tv2 <= tv1 + 1e-12


def test_landscape_eval_kernel_consistency():
    # the fused kernel must reproduce the plain prox pipeline
    rng = np.random.default_rng(5)
    f0 = rng.normal(size=30)
    eps = rng.normal(size=30)
    lam, t = 0.4, 0.8
    buf = np.empty(30)
    tau, mu, corr, resid = tv_landscape_eval(f0, eps, t, lam, 0.0, 0.0, buf)
    assert resid < 1e-10
    y = f0 + t * eps
    f = tv_prox(y, 0.5 * 30 * mu)
    assert np.max(np.abs(f - buf)) < 1e-9
    assert abs(mu - 2.0 * lam**2 * np.sum(np.abs(np.diff(f)))) < 1e-10
    assert abs(corr - eps @ (f - f0) / 30.0) < 1e-12
