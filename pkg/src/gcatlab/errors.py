"""Exception types raised across the package."""


class GcatError(Exception):
    """Base class for all package errors."""


class ValidationError(GcatError, ValueError):
    """Input violates a documented precondition."""


class ParseError(GcatError, ValueError):
    """A text input could not be parsed.

    ``line`` carries the 1-based line number when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericError(GcatError, ArithmeticError):
    """A numerical routine failed (non-convergence, non-finite values)."""
