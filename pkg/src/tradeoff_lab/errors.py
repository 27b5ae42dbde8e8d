"""Exception types shared across the package."""


class InvalidGridError(ValueError):
    """Design grid is not strictly increasing, too short, or non-finite."""


class InsufficientPointsError(ValueError):
    """Too few design points for the requested spline order."""


class DimensionError(ValueError):
    """Vector length does not match the design grid."""


class InfeasibleRadiusError(ValueError):
    """Requested radius lies below the minimal trade-off."""


class GridTooNarrowError(RuntimeError):
    """A maximizer landed on the boundary of the radius grid."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap.

    Carries the last residual so callers can report it.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NumericalError(RuntimeError):
    """A linear solve or internal consistency check failed."""
