"""Design grids and the built-in true functions used by the experiments."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGridError


@dataclass(frozen=True)
class DesignGrid:
    """Sorted distinct covariates x_1 < ... < x_n.

    Duplicate covariates are rejected rather than merged: the empirical norm
    treats each design point as one coordinate, so merging would silently
    change n.
    """

    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1:
            raise InvalidGridError("grid points must be a 1-d sequence")
        if pts.size < 3:
            raise InvalidGridError(f"need at least 3 design points, got {pts.size}")
        if not np.all(np.isfinite(pts)):
            raise InvalidGridError("grid points must be finite")
        if np.any(np.diff(pts) <= 0.0):
            raise InvalidGridError("grid points must be strictly increasing (duplicates rejected)")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.size

    def check_vector(self, f, name="f") -> np.ndarray:
        """Validate that f is a finite n-vector over this grid."""
        v = np.asarray(f, dtype=float)
        if v.shape != (self.n,):
            from .errors import DimensionError

            raise DimensionError(f"{name} has shape {v.shape}, expected ({self.n},)")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"{name} must be finite")
        return v


def uniform_grid(n: int) -> DesignGrid:
    """Equally spaced grid on [0, 1] including both endpoints."""
    return DesignGrid(np.linspace(0.0, 1.0, int(n)))


def _sin2pi(x):
    return np.sin(2.0 * np.pi * x)


def _poly3(x):
    # cubic with curvature energy of order one
    return x**3 - 1.5 * x**2 + 0.6 * x


def _step3(x):
    # three-level step function, total variation 2.5
    return np.where(x < 1.0 / 3.0, 0.0, np.where(x < 2.0 / 3.0, 1.0, -0.5))


TRUE_FUNCTIONS = {
    "sin2pi": _sin2pi,
    "poly3": _poly3,
    "step3": _step3,
}


def true_function_values(name: str, grid: DesignGrid) -> np.ndarray:
    """Evaluate a named true function on the grid."""
    try:
        fn = TRUE_FUNCTIONS[name]
    except KeyError:
        raise ValueError(
            f"unknown true function {name!r}; choose one of {sorted(TRUE_FUNCTIONS)}"
        ) from None
    return fn(grid.points)
