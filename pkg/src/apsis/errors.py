"""Exception hierarchy shared by all apsis modules."""


class ApsisError(Exception):
    """Base class for every error raised by the package."""


class DomainError(ApsisError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RegimeError(DomainError):
    """The energy is inadmissible for the chosen force law."""


class NoOscillationError(DomainError):
    """No bounded radial oscillation exists (angular momentum too large)."""


class NumericError(ApsisError, ArithmeticError):
    """A numerical procedure failed (bracketing, convergence, step collapse)."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class AccuracyError(NumericError):
    """Requested accuracy was not reached within the allowed work."""


class TruncationError(NumericError):
    """A series cannot be truncated within tolerance at the allowed order."""


class IntervalDomainError(DomainError):
    """Interval operand violates the operation's domain (e.g. 0 in divisor)."""
