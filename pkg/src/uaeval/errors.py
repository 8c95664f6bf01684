"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class UaevalError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class InvalidInput(UaevalError, ValueError):
    exit_code = 4


class DegenerateDistribution(InvalidInput):
    """A distribution would end up with a nonpositive variance."""

    exit_code = 6


class DegenerateInput(InvalidInput):
    """Input has zero spread where a spread is required."""

    exit_code = 7


class UndefinedCorrelation(UaevalError, ArithmeticError):
    """Pearson correlation with a constant argument (0/0)."""

    exit_code = 8


class NoFeasibleCalibration(UaevalError):
    exit_code = 5


class ParseError(UaevalError):
    """A dataset line could not be decoded."""

    exit_code = 2

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(UaevalError):
    """A decoded dataset violates a structural invariant."""

    exit_code = 3

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        self.detail = message
        prefix = []
        if line is not None:
            prefix.append(f"line {line}")
        if field is not None:
            prefix.append(f"field {field!r}")
        if prefix:
            message = f"{', '.join(prefix)}: {message}"
        super().__init__(message)
