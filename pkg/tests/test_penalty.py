"""Seminorm construction against quadrature oracles and seminorm axioms."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline, make_interp_spline

import tradeoff_lab as tl
from tradeoff_lab.errors import DimensionError, InsufficientPointsError, InvalidGridError

# Independent oracle: interpolate the values directly, integrate the squared
# m-th derivative with a high-order Gauss rule per interval.


def natural_energy_oracle(x, f, m=2, pts=12):
    if m == 2:
        s = CubicSpline(x, f, bc_type="natural")
    else:
        bc = [(d, 0.0) for d in range(m, 2 * m - 1)]
        s = make_interp_spline(x, f, k=2 * m - 1, bc_type=(bc, bc))
    dm = s.derivative(m)
    nodes, w = leggauss(pts)
    total = 0.0
    for a, b in zip(x[:-1], x[1:]):
        t = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        total += 0.5 * (b - a) * float(np.sum(w * dm(t) ** 2))
    return total


def test_tv_trivial_values():
    assert tl.tv_value(np.full(5, 3.7)) == 0.0
    v = np.array([0.1, 0.4, 1.2, 3.0])
    assert tl.tv_value(v) == pytest.approx(v[-1] - v[0], abs=1e-15)  # monotone telescopes
    assert tl.tv_value(np.array([1.0, 3.0, 2.0])) == pytest.approx(3.0, abs=1e-15)


def test_spline_annihilates_linear():
    grid = tl.uniform_grid(17)
    s = tl.spline_penalty_form(grid, 2)
    f = 2.0 * grid.points + 1.0
    k_norm = np.linalg.norm(s.dense_form(), 2)
    assert abs(s.energy(f)) <= 1e-10 * k_norm * float(f @ f)


def test_three_point_energy_is_48():
    # natural cubic through (0,.5,1)->(0,1,0): bending energy equals 48 exactly
    grid = tl.DesignGrid(np.array([0.0, 0.5, 1.0]))
    s = tl.spline_penalty_form(grid, 2)
    f = np.array([0.0, 1.0, 0.0])
    band = s.energy(f)
    oracle = natural_energy_oracle(grid.points, f)
    assert band == pytest.approx(48.0, rel=1e-12)
    assert band == pytest.approx(oracle, rel=1e-10)


def test_quadratic_energy_on_51_grid():
    # Samples of x^2 on 51 uniform points: the *natural* interpolant bends less
    # than x^2 itself near the ends (second derivative forced to 0), so the
    # energy is strictly below int (2)^2 = 4.  The oracle value is frozen.
    grid = tl.uniform_grid(51)
    f = grid.points**2
    s = tl.spline_penalty_form(grid, 2)
    band = s.energy(f)
    oracle = natural_energy_oracle(grid.points, f)
    assert band == pytest.approx(oracle, rel=1e-8)
    assert band == pytest.approx(3.9538119784648, rel=1e-10)
    assert abs(band - 4.0) < 0.06  # boundary-layer deficit only


def test_band_formula_matches_quadrature_randomly():
    rng = np.random.default_rng(42)
    for _ in range(100):
        n = int(rng.integers(3, 21))
        x = np.sort(rng.uniform(0.0, 1.0, n))
        while np.min(np.diff(x)) < 1e-3:
            x = np.sort(rng.uniform(0.0, 1.0, n))
        f = rng.normal(size=n)
        s = tl.spline_penalty_form(tl.DesignGrid(x), 2)
        got = s.energy(f)
        want = natural_energy_oracle(x, f)
        assert got == pytest.approx(want, rel=1e-8, abs=1e-12)


def test_gram_matches_quadrature_for_m3():
    rng = np.random.default_rng(9)
    x = np.linspace(0.0, 1.0, 12)
    s = tl.spline_penalty_form(tl.DesignGrid(x), 3)
    for _ in range(10):
        f = rng.normal(size=12)
        got = s.energy(f)
        want = natural_energy_oracle(x, f, m=3, pts=16)
        assert got == pytest.approx(want, rel=1e-8, abs=1e-9)
    # null space: polynomials of degree < 3
    k_norm = np.linalg.norm(s.dense_form(), 2)
    for j in range(3):
        f = x**j
        assert abs(s.energy(f)) <= 1e-10 * k_norm * max(float(f @ f), 1.0)


def test_monomial_null_space_m2():
    grid = tl.uniform_grid(31)
    s = tl.spline_penalty_form(grid, 2)
    k_norm = np.linalg.norm(s.dense_form(), 2)
    for j in range(2):
        f = grid.points**j
        assert abs(s.energy(f)) <= 1e-10 * k_norm * float(f @ f)


def test_form_symmetric_and_psd():
    grid = tl.uniform_grid(25)
    k = tl.spline_penalty_form(grid, 2).dense_form()
    assert np.max(np.abs(k - k.T)) <= 1e-12 * np.max(np.abs(k))
    w = np.linalg.eigvalsh(k)
    assert w[0] >= -1e-10 * w[-1]


def test_seminorm_axioms_bulk():
    rng = np.random.default_rng(1)
    grid = tl.uniform_grid(15)
    seminorms = [tl.spline_penalty_form(grid, 2), tl.TotalVariationSeminorm(15)]
    for s in seminorms:
        assert tl.eval_seminorm(s, np.zeros(15)) == 0.0
        for _ in range(1000):
            f = rng.normal(size=15)
            g = rng.normal(size=15)
            iff, ig = s.value(f), s.value(g)
            scale = max(iff, ig, 1e-12)
            assert s.value(-2.5 * f) == pytest.approx(2.5 * iff, rel=1e-9, abs=1e-9 * scale)
            assert s.value(f + g) <= iff + ig + 1e-9 * scale


@settings(deadline=None, max_examples=50)
@given(st.integers(0, 2**32 - 1), st.floats(-10.0, 10.0))
def test_hypothesis_homogeneity(seed, c):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=10)
    s = tl.TotalVariationSeminorm(10)
    assert s.value(c * f) == pytest.approx(abs(c) * s.value(f), rel=1e-9, abs=1e-9)


def test_error_conditions():
    grid = tl.uniform_grid(4)
    with pytest.raises(InsufficientPointsError):
        tl.spline_penalty_form(grid, 4)  # n <= m
    with pytest.raises(InvalidGridError):
        tl.DesignGrid(np.array([0.0, 0.5, 0.5, 1.0]))  # duplicates rejected
    with pytest.raises(InvalidGridError):
        tl.DesignGrid(np.array([0.0, 0.7, 0.4]))
    with pytest.raises(InvalidGridError):
        tl.DesignGrid(np.array([0.0, 1.0]))  # n >= 3
    s = tl.spline_penalty_form(grid, 2)
    with pytest.raises(DimensionError):
        s.value(np.zeros(5))
    with pytest.raises(DimensionError):
        tl.TotalVariationSeminorm(4).value(np.zeros(3))
    with pytest.raises(ValueError):
        tl.QuadraticSeminorm(np.array([[1.0, 2.0], [0.0, 1.0]]))  # not symmetric
    with pytest.raises(ValueError):
        tl.QuadraticSeminorm(np.array([[1.0, 0.0], [0.0, -1.0]]))  # not PSD


def test_user_supplied_form_clamps_noise():
    base = np.diag([1.0, 0.5, 0.0])
    noisy = base - 1e-13 * np.eye(3)
    s = tl.QuadraticSeminorm(noisy)
    assert s.value(np.array([0.0, 0.0, 1.0])) == 0.0
