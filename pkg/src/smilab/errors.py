"""Exception hierarchy shared across the package."""


class SMIError(Exception):
    """Base class for all domain errors raised by smilab."""


class PreconditionError(SMIError, ValueError):
    """An input violates a documented precondition (e.g. non-Hermitian)."""


class DimensionError(SMIError, ValueError):
    """Operand shapes are inconsistent or a dimension is invalid."""


class NumericalError(SMIError, ArithmeticError):
    """A numerical routine failed to converge."""


class ConfigError(SMIError, ValueError):
    """Invalid ensemble, experiment or CLI configuration."""


class ResolutionError(SMIError, ValueError):
    """A target distribution cannot be fine-grained under the denominator cap."""


class NullConditioningError(SMIError, ZeroDivisionError):
    """Conditioning on an event of (numerically) zero probability."""
