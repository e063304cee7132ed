"""Exception hierarchy shared by the library and the CLI."""


class QuboError(ValueError):
    """Base class for all errors raised by this package."""


class DimensionError(QuboError):
    """Bit vectors or instances of incompatible size were combined."""


class EnumerationLimitError(QuboError):
    """An exhaustive computation was requested above the configured size limit."""


class DegenerateError(QuboError):
    """The instance has too few distinct values (or energies) for the operation."""


class ParseError(QuboError):
    """A QUBO file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
