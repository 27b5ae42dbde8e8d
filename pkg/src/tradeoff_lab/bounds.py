"""Closed-form tail bounds, envelope constants, and the rate-optimal lambda.

All probability bounds are clamped to [0, 1]; the raw exponential formulas
can exceed 1 and the clamped value is the standard reading.  The envelope
constants (C, c0, c1, c2) are *defaults*, not derived values: the entropy
condition they parameterize only fixes them up to unspecified constants, so
outputs that depend on them are labeled accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class EntropyParams:
    """Parameters of the covering-number growth condition.

    ``alpha`` is the entropy exponent in (0, 2) (1/m for order-m splines,
    1 for total variation).  The remaining constants enter only through the
    envelope constants K1, K2.
    """

    alpha: float
    c0: float = 2.0
    c1: float = 1.0
    c2: float = 4.0
    big_c: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"entropy exponent alpha must lie in (0, 2), got {self.alpha}")
        if not 0.0 < self.c0 <= 2.0:
            raise ValueError("c0 must lie in (0, 2]")
        if not 0.0 < self.c1 < self.c2:
            raise ValueError("need c2 > c1 > 0")
        if self.big_c < 0.5:
            raise ValueError("C must be >= 1/2")


def _check_positive(**kwargs):
    for name, val in kwargs.items():
        if not val > 0:
            raise ValueError(f"{name} must be positive, got {val}")


def tau_ratio_tail(x: float, n: int, r0: float) -> float:
    """Bound on P(|tau(fhat)/R0 - 1| >= x): min(1, 3 exp(-x^4 n R0^2 / (32(1+x)^2)))."""
    _check_positive(x=x, n=n, r0=r0)
    exponent = -(x**4) * (math.sqrt(n) * r0) ** 2 / (32.0 * (1.0 + x) ** 2)
    return min(1.0, 3.0 * math.exp(exponent))


def separation_event_bound(x: float, n: int, r0: float) -> float:
    """Bound on the failure of the landscape separation event at R0 +/- x.

    Equals ``tau_ratio_tail`` after the change of variables y = x / R0:
    min(1, 3 exp(-n x^4 / (32 (R0 + x)^2))).
    """
    _check_positive(x=x, n=n, r0=r0)
    exponent = -n * x**4 / (32.0 * (r0 + x) ** 2)
    return min(1.0, 3.0 * math.exp(exponent))


def k_constants(ep: EntropyParams, n: int, lam: float) -> tuple[float, float]:
    """Envelope constants K1 < K2; both scale as (n lam^alpha)^(-1/2)."""
    _check_positive(n=n, lam=lam)
    scale = (1.0 / (n * lam**ep.alpha)) ** 0.5
    k1 = 0.5 * ep.c0 ** (1.0 - ep.alpha / 2.0) * math.sqrt(ep.c1) * scale
    k2 = 4.0 * ep.big_c * math.sqrt(ep.c2) / (2.0 - ep.alpha) * scale
    return k1, k2


def parabola_envelopes(r: float, k1: float, k2: float) -> tuple[float, float]:
    """The sandwich parabolas g_i(R) = K_i R - R^2/2 = -(R - K_i)^2/2 + K_i^2/2."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    return k1 * r - 0.5 * r * r, k2 * r - 0.5 * r * r


def dudley_upper(ep: EntropyParams, n: int, lam: float, r: float) -> float:
    """Entropy-integral upper bound on the mean sup correlation: K2 * R.

    The exact value of the underlying integral C * int_0^{2R}
    sqrt(c2 (R/(u lam))^alpha / n) du is 2^(-alpha/2) * K2 * R; the reported
    constant rounds 2^(2 - alpha/2) up to 4, which keeps K2 * R an upper
    bound for every alpha in (0, 2).
    """
    if r < 0:
        raise ValueError("radius must be nonnegative")
    _, k2 = k_constants(ep, n, lam)
    return k2 * r


def sudakov_lower(ep: EntropyParams, n: int, lam: float, r: float) -> float:
    """Packing-based lower bound on the mean sup correlation: K1 * R."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    k1, _ = k_constants(ep, n, lam)
    return k1 * r


def landscape_deviation_tail(t: float, n: int, r: float) -> float:
    """Bound on P(|H_n(R) - H(R)| >= t): min(1, 2 exp(-n t^2 / (2 R^2))).

    Follows from the sup correlation being (R/sqrt(n))-Lipschitz in the
    Gaussian noise vector; invariant under (t, R) -> (ct, cR).
    """
    _check_positive(t=t, n=n, r=r)
    return min(1.0, 2.0 * math.exp(-n * t * t / (2.0 * r * r)))


def rate_lambda(n: int, alpha: float, c: float = 1.0) -> float:
    """The rate-matching tuning parameter c * n^(-1/(2+alpha))."""
    _check_positive(n=n, c=c)
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"entropy exponent alpha must lie in (0, 2), got {alpha}")
    return c * float(n) ** (-1.0 / (2.0 + alpha))
