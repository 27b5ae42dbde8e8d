"""Exact solver for the 1-d total-variation proximal problem.

``tv_prox(y, gam)`` returns the exact minimizer of

    0.5 * ||y - f||_2^2 + gam * sum_i |f_{i+1} - f_i|

by a single left-to-right taut-string walk (Condat's direct algorithm).
The walk commits one constant segment at a time, so plateaus in the output
are exactly equal floats and jumps are genuine.  Worst-case O(n^2) on
adversarial inputs but linear in practice; no iterations, no tolerance.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _tv_prox_kernel(y, lam, x):
    n = y.shape[0]
    if n == 0:
        return
    if n == 1 or lam <= 0.0:
        for i in range(n):
            x[i] = y[i]
        return
    k = 0
    k0 = 0
    km = 0
    kp = 0
    vmin = y[0] - lam
    vmax = y[0] + lam
    umin = lam
    umax = -lam
    while True:
        while k == n - 1:
            if umin < 0.0:
                # lower string bends: commit segment at vmin up to km
                while k0 <= km:
                    x[k0] = vmin
                    k0 += 1
                k = k0
                km = k0
                vmin = y[k0]
                umin = lam
                umax = vmin + lam - vmax
            elif umax > 0.0:
                while k0 <= kp:
                    x[k0] = vmax
                    k0 += 1
                k = k0
                kp = k0
                vmax = y[k0]
                umax = -lam
                umin = vmax - lam - vmin
            else:
                vmin += umin / (k - k0 + 1)
                while k0 <= k:
                    x[k0] = vmin
                    k0 += 1
                return
        umin_c = umin + y[k + 1] - vmin
        umax_c = umax + y[k + 1] - vmax
        if umin_c < -lam:
            # negative jump is forced after km
            while k0 <= km:
                x[k0] = vmin
                k0 += 1
            k = km + 1
            k0 = k
            km = k
            kp = k
            vmin = y[k]
            vmax = vmin + 2.0 * lam
            umin = lam
            umax = -lam
        elif umax_c > lam:
            # positive jump is forced after kp
            while k0 <= kp:
                x[k0] = vmax
                k0 += 1
            k = kp + 1
            k0 = k
            km = k
            kp = k
            vmax = y[k]
            vmin = vmax - 2.0 * lam
            umin = lam
            umax = -lam
        else:
            k += 1
            umin = umin_c
            umax = umax_c
            if umin >= lam:
                vmin += (umin - lam) / (k - k0 + 1)
                umin = lam
                km = k
            if umax <= -lam:
                vmax += (umax + lam) / (k - k0 + 1)
                umax = -lam
                kp = k


def tv_prox(y, gam: float) -> np.ndarray:
    """Exact minimizer of 0.5||y - f||^2 + gam * TV(f)."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    out = np.empty_like(y)
    _tv_prox_kernel(y, float(gam), out)
    return out


@njit(cache=True, nogil=True)
def _tv_value_nb(f):
    s = 0.0
    for i in range(1, f.shape[0]):
        s += abs(f[i] - f[i - 1])
    return s


@njit(cache=True, nogil=True)
def _tv_fit_illinois(y, lam, hint_lo, hint_hi, f):
    """Solve mu = 2 lam^2 TV(prox(y, n mu / 2)) for the TV^2-penalized fit.

    phi(mu) = 2 lam^2 TV(f_mu) - mu is piecewise linear and strictly
    decreasing, so safeguarded regula falsi (Illinois) lands on the root in a
    few prox evaluations.  A valid (hint_lo, hint_hi) bracket (pass 0, 0 for
    none) is verified by sign before use.  Writes the fit into f and returns
    (mu, abs_phi_residual).
    """
    n = y.shape[0]
    two_lam2 = 2.0 * lam * lam
    tvy = _tv_value_nb(y)
    if tvy == 0.0:
        for i in range(n):
            f[i] = y[i]
        return 0.0, 0.0
    full_hi = two_lam2 * tvy
    scale = max(full_hi, 1.0)
    atol = 1e-12 * scale
    ftol = 1e-13 * scale

    lo = 0.0
    flo = full_hi  # phi(0) = 2 lam^2 TV(y)
    hi = full_hi
    _tv_prox_kernel(y, 0.5 * n * hi, f)
    fhi = two_lam2 * _tv_value_nb(f) - hi
    if 0.0 < hint_lo < hint_hi < full_hi:
        _tv_prox_kernel(y, 0.5 * n * hint_lo, f)
        philo = two_lam2 * _tv_value_nb(f) - hint_lo
        if philo >= 0.0:
            _tv_prox_kernel(y, 0.5 * n * hint_hi, f)
            phihi = two_lam2 * _tv_value_nb(f) - hint_hi
            if phihi <= 0.0:
                lo, flo, hi, fhi = hint_lo, philo, hint_hi, phihi
    mu = hi
    phi = fhi
    last_side = 0
    for _ in range(200):
        if hi - lo <= atol or abs(phi) <= ftol:
            break
        denom = flo - fhi
        if denom > 0.0:
            mu = lo + flo * (hi - lo) / denom
        else:
            mu = 0.5 * (lo + hi)
        lo_guard = lo + 0.01 * (hi - lo)
        hi_guard = hi - 0.01 * (hi - lo)
        if mu < lo_guard:
            mu = lo_guard
        elif mu > hi_guard:
            mu = hi_guard
        _tv_prox_kernel(y, 0.5 * n * mu, f)
        phi = two_lam2 * _tv_value_nb(f) - mu
        if phi > 0.0:
            lo = mu
            flo = phi
            if last_side == 1:
                fhi *= 0.5  # Illinois: damp the retained end
            last_side = 1
        else:
            hi = mu
            fhi = phi
            if last_side == -1:
                flo *= 0.5
            last_side = -1
    _tv_prox_kernel(y, 0.5 * n * mu, f)
    return mu, abs(two_lam2 * _tv_value_nb(f) - mu)


@njit(cache=True, nogil=True)
def tv_landscape_eval(f0, eps, t, lam, hint_lo, hint_hi, f):
    """One Lagrangian landscape evaluation at pseudo-data f0 + t * eps.

    Writes the inner fit into f and returns (tau, mu, corr, phi_residual)
    where corr = <eps, f - f0>/n.
    """
    n = f0.shape[0]
    y = np.empty(n)
    for i in range(n):
        y[i] = f0[i] + t * eps[i]
    mu, resid = _tv_fit_illinois(y, lam, hint_lo, hint_hi, f)
    fit2 = 0.0
    corr = 0.0
    for i in range(n):
        d = f[i] - f0[i]
        fit2 += d * d
        corr += eps[i] * d
    tvf = _tv_value_nb(f)
    tau = np.sqrt(fit2 / n + lam * lam * tvf * tvf)
    return tau, mu, corr / n, resid


def tv_prox_dual_gap(y, gam: float, f) -> float:
    """Sup-norm infeasibility of the telescoped dual vector of a candidate f.

    The stationarity conditions of the prox problem determine the dual
    variable of arc i by the running sum u_i = sum_{j<=i} (f_j - y_j) / gam;
    a true solution keeps |u_i| <= 1, u at the right boundary 0, and u_i
    pinned to the jump sign wherever f has a jump.  Returns the largest
    violation among those three conditions (0 for an exact solution).
    """
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    if gam <= 0.0:
        return float(np.max(np.abs(f - y), initial=0.0))
    u = np.cumsum(f - y) / gam
    viol = max(0.0, float(np.max(np.abs(u[:-1]), initial=0.0)) - 1.0)
    viol = max(viol, abs(float(u[-1])))
    d = np.diff(f)
    jumps = d != 0.0
    if np.any(jumps):
        viol = max(viol, float(np.max(np.abs(u[:-1][jumps] - np.sign(d[jumps])))))
    return viol
