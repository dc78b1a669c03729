"""Exception types raised across the package."""


class MewfitError(Exception):
    """Base class for all package errors."""


class DegenerateRange(MewfitError):
    """Data bandwidth is zero; the unit-square adaptation is undefined."""


class LengthMismatch(MewfitError):
    """Two per-point arrays disagree in length."""


class DegreeTooHigh(MewfitError):
    """Polynomial degree requires more coefficients than there are points."""


class SingularSystem(MewfitError):
    """Normal equations are numerically singular for the requested degree."""


class InfeasibleTarget(MewfitError):
    """Prescribed mean squared error lies outside the reachable range of the
    current residuals, or would require a multiplier beyond ``beta_max``."""


class NoConvergence(MewfitError):
    """Iteration cap hit. ``result`` carries the best state reached so far."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class DimensionMismatch(MewfitError):
    """Two image grids disagree in shape."""


class UnknownScenario(MewfitError):
    """Scenario name is not in the registry."""


class PgmError(MewfitError):
    """Malformed PGM stream."""
