"""Exception types raised across the package."""


class GwbError(Exception):
    """Base class for all package errors."""


class ValidationError(GwbError, ValueError):
    """Input violates a documented precondition."""


class NotSymmetric(ValidationError):
    pass


class NegativeEigenvalueBeyondTolerance(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NegativeLambda(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class EmptyViewRow(ValidationError):
    pass


class NonPsdViewCovariance(ValidationError):
    pass


class SingularViewCovariance(ValidationError):
    pass


class TargetMismatch(ValidationError):
    pass


class NonPsdPrior(ValidationError):
    pass


class InsufficientDegreesOfFreedom(ValidationError):
    pass


class ParseError(ValidationError):
    """Malformed input file; ``row`` and ``column`` locate the bad cell when known."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class TooFewAssets(ValidationError):
    pass


class ZeroVariance(ValidationError):
    pass


class TooShort(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class NonConvergence(GwbError, RuntimeError):
    """Iterative solver stopped with residuals above tolerance."""

    def __init__(self, message, residual=None, x=None):
        super().__init__(message)
        self.residual = residual
        self.x = x


class BudgetExhausted(GwbError, RuntimeError):
    """Numeric oracle ran out of iterations; ``best`` holds the best point found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NotApplicable(GwbError):
    """A cross-check does not apply to the given inputs (skipped, not failed)."""
