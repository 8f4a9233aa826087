"""Exception types shared across the package."""


class WeylflowError(Exception):
    """Base class for all library errors."""


class ShapeError(WeylflowError, ValueError):
    """An input has the wrong shape or lives in the wrong space."""


class CapacityError(WeylflowError):
    """A requested enumeration exceeds the configured size cap."""


class DomainError(WeylflowError, ValueError):
    """An input violates a documented precondition."""


class SingularityError(WeylflowError):
    """An operation required regularity that the input does not have."""


class DivergenceError(WeylflowError):
    """A time integration left the trusted region.

    Attributes
    ----------
    last_valid_time : float
        Last grid time at which the state was still finite and bounded.
    """

    def __init__(self, message, last_valid_time):
        super().__init__(message)
        self.last_valid_time = last_valid_time


class LPError(WeylflowError):
    """The internal simplex solver failed (unbounded or cycling)."""
