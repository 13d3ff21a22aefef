"""Exception hierarchy shared by every module of the package."""


class GrushinError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(GrushinError, ValueError):
    """An argument lies outside the domain of the function."""


class DimensionMismatch(GrushinError, ValueError):
    pass


class NonpositiveScale(DomainError):
    pass


class OutOfRange(DomainError):
    """The requested value is not in the range of the function being inverted."""


class NoSignChange(GrushinError, ValueError):
    pass


class NoConvergence(GrushinError, RuntimeError):
    pass


class ToleranceNotMet(GrushinError, RuntimeError):
    """Refinement budget exhausted; ``estimate`` holds the best value found."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class SingularPoint(GrushinError, ValueError):
    pass


class BranchCutViolation(GrushinError, ArithmeticError):
    pass


class DegenerateEnvelope(GrushinError, ValueError):
    pass


class EmptyBall(GrushinError, ValueError):
    pass


class ZeroMass(GrushinError, ValueError):
    pass


class ConfigError(GrushinError, ValueError):
    pass
