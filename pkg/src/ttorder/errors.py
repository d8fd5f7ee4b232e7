"""Exception types shared across the library."""


class TtOrderError(Exception):
    """Base class for all library-specific errors."""


class ValidationError(TtOrderError, ValueError):
    """An input violates a documented invariant."""


class CapacityError(ValidationError):
    """A dense 2**L coefficient array would exceed the configured mode cap."""


class ConsistencyError(TtOrderError, ValueError):
    """Numerically inconsistent data, e.g. a broken norm or particle sector."""


class DegeneracyError(TtOrderError, RuntimeError):
    """A rank condition required by a fast path does not hold."""


class CapExceededError(TtOrderError, RuntimeError):
    """An exhaustive search space is larger than the configured cap."""


class ParseError(TtOrderError, ValueError):
    """Malformed input file (CSV/JSON)."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column
