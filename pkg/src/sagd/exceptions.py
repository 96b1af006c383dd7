"""Exception types shared across the package."""


class SagdError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SagdError, ValueError):
    """An argument violates a documented precondition."""


class NotPositiveDefiniteError(SagdError, ValueError):
    """A matrix expected to be SPD has a non-positive pivot."""


class NotStronglyConvexError(SagdError, ValueError):
    """The objective has no usable strong convexity constant (mu <= 0)."""


class ConvergenceError(SagdError, RuntimeError):
    """An iterative routine exhausted its budget before reaching tolerance.

    ``achieved`` carries the best residual/gradient norm reached, so callers
    can decide whether the partial result is still usable.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ParseError(SagdError, ValueError):
    """A data file does not conform to its declared format."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EnumerationLimitError(SagdError, ValueError):
    """A brute-force enumeration was requested beyond its size cap."""
