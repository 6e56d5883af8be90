"""Exception types shared across the package."""


class FockScatterError(Exception):
    """Base class for all library errors."""


class TruncationCapError(FockScatterError):
    """A requested basis would exceed the configured dimension cap."""

    def __init__(self, dim, cap):
        self.dim = dim
        self.cap = cap
        super().__init__(f"basis dimension {dim} exceeds the cap {cap}")


class DimensionError(FockScatterError, ValueError):
    """Operands do not match the declared bases."""


class HypothesisViolation(FockScatterError, ValueError):
    """Model data violates a structural hypothesis (mass gap, infrared cutoff, ...)."""


class DomainError(FockScatterError, ValueError):
    """Argument outside the domain where a construction is defined."""


class PreconditionError(FockScatterError, ValueError):
    """A check was requested on data that does not satisfy its preconditions."""


class RecurrenceError(FockScatterError, ValueError):
    """A time window reaches past the finite-mode recurrence estimate."""

    def __init__(self, t_max, estimate):
        self.t_max = t_max
        self.estimate = estimate
        super().__init__(
            f"t_max={t_max:.6g} is not below the recurrence estimate {estimate:.6g}"
        )


class ConfigError(FockScatterError, ValueError):
    """Experiment configuration failed validation."""


class TruncationOverflowError(PreconditionError):
    """An operation would push quanta past the total-quanta cutoff it works in."""
