"""Seminorms used in the penalty term.

Two variants are provided:

* ``QuadraticSeminorm`` -- I^2(f) = f' K f for a symmetric PSD form K.  The
  spline roughness penalty (integrated squared m-th derivative of the natural
  interpolating spline of the grid values) is the main constructor.  For
  m = 2 the form is kept in Reinsch factored shape K = Q R^{-1} Q', which
  allows O(n) energies and O(n) shifted solves (I + tK)^{-1} via banded
  Cholesky; for general m a dense Gram matrix is assembled by exact
  piecewise-polynomial integration.
* ``TotalVariationSeminorm`` -- I(f) = sum |f_i - f_{i-1}|, stateless.

All values are pure functions of their inputs; instances are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import make_interp_spline
from scipy.linalg import cho_factor, cho_solve, cho_solve_banded, cholesky_banded, solveh_banded

from .errors import DimensionError, InsufficientPointsError, NumericalError
from .grids import DesignGrid

# relative PSD tolerance: eigenvalues in (-tol*max_eig, 0) are clamped to 0
PSD_RTOL = 1e-10
SYM_RTOL = 1e-12


def tv_value(f) -> float:
    """Total variation of the grid values: sum_{i=2}^n |f_i - f_{i-1}|."""
    v = np.asarray(f, dtype=float)
    if v.ndim != 1:
        raise DimensionError("total variation expects a 1-d vector")
    return float(np.sum(np.abs(np.diff(v))))


class Seminorm:
    """Common interface of the penalty functionals I(.)."""

    n: int

    def value(self, f) -> float:
        raise NotImplementedError

    def squared(self, f) -> float:
        v = self.value(f)
        return v * v

    def _check(self, f) -> np.ndarray:
        v = np.asarray(f, dtype=float)
        if v.shape != (self.n,):
            raise DimensionError(f"vector has shape {v.shape}, expected ({self.n},)")
        return v


class TotalVariationSeminorm(Seminorm):
    """I(f) = TV(f); carries no state beyond the expected dimension."""

    def __init__(self, n: int):
        self.n = int(n)

    def value(self, f) -> float:
        return tv_value(self._check(f))

    def __repr__(self):
        return f"TotalVariationSeminorm(n={self.n})"


class _ReinschForm:
    """K = Q R^{-1} Q' in banded shape for the cubic-spline penalty (m = 2).

    Q' is the (n-2) x n operator taking differences of first divided
    differences, R the tridiagonal Gram matrix of the interval lengths.
    """

    def __init__(self, x: np.ndarray):
        n = x.size
        h = np.diff(x)
        self.n = n
        d0 = 1.0 / h[:-1]
        d2 = 1.0 / h[1:]
        self.qt = sp.diags([d0, -(d0 + d2), d2], [0, 1, 2], shape=(n - 2, n), format="csr")
        ni = n - 2
        # R in symmetric-banded (upper) storage for solveh_banded
        if ni > 1:
            self.r_banded = np.zeros((2, ni))
            self.r_banded[1] = (h[:-1] + h[1:]) / 3.0
            self.r_banded[0, 1:] = h[1:-1] / 6.0
        else:
            self.r_banded = ((h[:-1] + h[1:]) / 3.0).reshape(1, 1)
        self._shift_cache: dict[float, tuple] = {}

    def second_divided_differences(self, f: np.ndarray) -> np.ndarray:
        return self.qt @ f

    def energy(self, f: np.ndarray) -> float:
        e = self.qt @ f
        g = solveh_banded(self.r_banded, e)
        return float(e @ g)

    def apply(self, f: np.ndarray) -> np.ndarray:
        e = self.qt @ f
        g = solveh_banded(self.r_banded, e)
        return self.qt.T @ g

    def _shift_factor(self, t: float):
        fac = self._shift_cache.get(t)
        if fac is None:
            ni = self.n - 2
            m = self._r_matrix() + t * (self.qt @ self.qt.T)
            md = m.todia()
            u = min(2, ni - 1)
            ab = np.zeros((u + 1, ni))
            dense_diags = {int(off): md.diagonal(int(off)) for off in range(u + 1)}
            for off, diag in dense_diags.items():
                ab[u - off, off:] = diag
            try:
                fac = (cholesky_banded(ab), u)
            except np.linalg.LinAlgError as ex:
                diag = ab[-1]
                raise NumericalError(
                    f"shifted spline system not positive definite (t={t:.3e}, "
                    f"diagonal spread {diag.max() / max(diag.min(), 1e-300):.3e}): {ex}"
                ) from ex
            self._shift_cache[t] = fac
        return fac

    def _r_matrix(self):
        ni = self.n - 2
        main = self.r_banded[-1]
        if ni > 1:
            off = self.r_banded[0, 1:]
            return sp.diags([main, off, off], [0, 1, -1], format="csc")
        return sp.diags([main], [0], format="csc")

    def shifted_solve(self, t: float, rhs: np.ndarray) -> np.ndarray:
        """Solve (I + t K) x = rhs in O(n) via the Woodbury identity."""
        cb, _ = self._shift_factor(float(t))
        w = self.qt @ rhs
        z = cho_solve_banded((cb, False), w)
        return rhs - t * (self.qt.T @ z)


class _DenseForm:
    """Dense symmetric PSD quadratic form with cached shifted factorizations."""

    def __init__(self, k: np.ndarray):
        self.k = k
        self.n = k.shape[0]
        self._shift_cache: dict[float, tuple] = {}

    def energy(self, f: np.ndarray) -> float:
        return float(f @ (self.k @ f))

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.k @ f

    def shifted_solve(self, t: float, rhs: np.ndarray) -> np.ndarray:
        t = float(t)
        fac = self._shift_cache.get(t)
        if fac is None:
            a_mat = np.eye(self.n) + t * self.k
            try:
                fac = cho_factor(a_mat)
            except np.linalg.LinAlgError as ex:  # pragma: no cover - PSD guards above
                raise NumericalError(
                    f"shifted system not positive definite "
                    f"(t={t:.3e}, cond~{np.linalg.cond(a_mat):.3e}): {ex}"
                ) from ex
            self._shift_cache[t] = fac
        return cho_solve(fac, rhs)


class QuadraticSeminorm(Seminorm):
    """I^2(f) = f' K f with K symmetric positive semidefinite.

    Parameters
    ----------
    form : array or _ReinschForm
        Dense n x n form, validated and clamped to the PSD cone, or the
        banded factored representation produced by ``spline_penalty_form``.
    order : int
        Derivative order m of the underlying spline penalty (>= 2).
    """

    def __init__(self, form, order: int = 2, _validated: bool = False):
        self.order = int(order)
        if self.order < 2:
            raise ValueError("spline order m must be >= 2")
        if isinstance(form, _ReinschForm):
            # PSD by construction: K = Q R^{-1} Q' with R positive definite
            self._impl = form
            self.n = form.n
        else:
            k = np.asarray(form, dtype=float)
            if k.ndim != 2 or k.shape[0] != k.shape[1]:
                raise DimensionError("quadratic form must be a square matrix")
            if not _validated:
                k = _validate_psd(k)
            self._impl = _DenseForm(k)
            self.n = k.shape[0]

    def value(self, f) -> float:
        return float(np.sqrt(max(self.energy(f), 0.0)))

    def energy(self, f) -> float:
        """The quadratic form f' K f (may be a tiny negative float; not clamped)."""
        return self._impl.energy(self._check(f))

    def apply(self, f) -> np.ndarray:
        """Matrix-vector product K f."""
        return self._impl.apply(self._check(f))

    def shifted_solve(self, t: float, rhs) -> np.ndarray:
        """Solve (I + t K) x = rhs for t > 0; factorizations are cached per t."""
        if t <= 0.0:
            raise ValueError("shift t must be positive")
        return self._impl.shifted_solve(t, self._check(rhs))

    def dense_form(self) -> np.ndarray:
        """Materialize K as a dense array (O(n^2) memory; intended for audits)."""
        if isinstance(self._impl, _DenseForm):
            return self._impl.k.copy()
        n = self.n
        out = np.empty((n, n))
        eye = np.eye(n)
        for i in range(n):
            out[:, i] = self._impl.apply(eye[:, i])
        return 0.5 * (out + out.T)

    def _check(self, f) -> np.ndarray:
        v = np.asarray(f, dtype=float)
        if v.shape != (self.n,):
            raise DimensionError(f"vector has shape {v.shape}, expected ({self.n},)")
        return v

    def __repr__(self):
        kind = "reinsch" if isinstance(self._impl, _ReinschForm) else "dense"
        return f"QuadraticSeminorm(n={self.n}, order={self.order}, form={kind!r})"


def _validate_psd(k: np.ndarray) -> np.ndarray:
    sym_err = np.max(np.abs(k - k.T))
    scale = max(np.max(np.abs(k)), 1e-300)
    if sym_err > SYM_RTOL * scale * 10:
        raise ValueError(f"quadratic form is not symmetric (max asymmetry {sym_err:.3e})")
    k = 0.5 * (k + k.T)
    w, v = np.linalg.eigh(k)
    wmax = max(w[-1], 0.0)
    tol = PSD_RTOL * max(wmax, 1e-300)
    if w[0] < -tol:
        raise ValueError(f"quadratic form has negative eigenvalue {w[0]:.3e}")
    if w[0] < 0.0:
        w = np.clip(w, 0.0, None)
        k = (v * w) @ v.T
        k = 0.5 * (k + k.T)
    return k


def spline_penalty_form(grid: DesignGrid, m: int) -> QuadraticSeminorm:
    """Quadratic form of the integrated squared m-th derivative.

    The grid values are extended to a function by the natural interpolating
    spline of order 2m (the minimal-energy extension), so f' K f equals the
    exact integral of the squared m-th derivative of that interpolant.  The
    null space of K is exactly the polynomials of degree < m restricted to
    the grid.

    m = 2 uses the banded Reinsch factorization; larger m assembles the dense
    Gram matrix of the interpolant basis derivatives with Gauss-Legendre
    rules that are exact for the piecewise-polynomial integrands.
    """
    m = int(m)
    if m < 2:
        raise ValueError("spline order m must be >= 2")
    n = grid.n
    if n <= m:
        raise InsufficientPointsError(f"need n > m design points, got n={n}, m={m}")
    x = grid.points
    if m == 2:
        return QuadraticSeminorm(_ReinschForm(x), order=2)
    return QuadraticSeminorm(_natural_spline_gram(x, m), order=m)


def _natural_spline_gram(x: np.ndarray, m: int) -> np.ndarray:
    """Gram matrix K_ij = integral of s_i^(m) s_j^(m) for the natural basis.

    s_i interpolates the i-th unit vector with a degree 2m-1 spline whose
    derivatives of order m..2m-2 vanish at both ends.  The integrand is
    piecewise polynomial of degree 2m-2, so an m-point Gauss rule per
    interval integrates it exactly.
    """
    n = x.size
    k = 2 * m - 1
    bc = [(d, 0.0) for d in range(m, 2 * m - 1)]
    nodes, wts = leggauss(m)
    half = 0.5 * np.diff(x)
    mid = 0.5 * (x[:-1] + x[1:])
    t = (half[:, None] * nodes[None, :] + mid[:, None]).ravel()
    w = (half[:, None] * wts[None, :]).ravel()
    d = np.empty((t.size, n))
    eye = np.eye(n)
    for i in range(n):
        try:
            s = make_interp_spline(x, eye[i], k=k, bc_type=(bc, bc))
        except Exception as ex:
            raise InsufficientPointsError(
                f"cannot build order-{2 * m} natural spline basis on {n} points: {ex}"
            ) from ex
        d[:, i] = s.derivative(m)(t)
    gram = d.T @ (w[:, None] * d)
    return _validate_psd(gram)


def eval_seminorm(s: Seminorm, f) -> float:
    """I(f): sqrt of the clamped quadratic form, or the total variation."""
    return s.value(f)
