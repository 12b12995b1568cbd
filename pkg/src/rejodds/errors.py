"""Exception types shared across the package."""


class RejoddsError(Exception):
    """Base class for all errors raised by rejodds."""


class DomainError(RejoddsError, ValueError):
    """An argument lies outside the domain of the operation."""


class InfeasibleTargetError(RejoddsError, ValueError):
    """A design target cannot be met (e.g. a rejection ratio above 1/alpha)."""


class UnsupportedModelError(RejoddsError, ValueError):
    """The operation is not defined for the given test model."""


class ConvergenceError(RejoddsError, ArithmeticError):
    """A numerical routine ran out of budget before meeting its tolerance.

    The best estimate and its error bound are kept on the exception so callers
    can decide whether the partial answer is usable.
    """

    def __init__(self, message, estimate=float("nan"), error=float("inf")):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class InsufficientSampleError(RejoddsError, ArithmeticError):
    """A Monte Carlo estimate has too few retained draws to be computed."""


class ParseError(RejoddsError, ValueError):
    """Malformed input row; ``line`` is the 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(ParseError):
    """Well-formed input row carrying an invalid value."""
