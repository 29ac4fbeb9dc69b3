"""Exception types raised across the package."""


class HistlabError(Exception):
    """Base class for all histlab errors."""


class DomainError(HistlabError, ValueError):
    """A parameter lies outside the domain where a formula is defined."""


class PreconditionError(HistlabError, ValueError):
    """An operation was called on inputs that violate its preconditions."""


class StructuralError(HistlabError, ValueError):
    """Mismatched grids, unknown history labels and similar shape problems."""


class TruncationError(HistlabError, ArithmeticError):
    """An eigenseries truncation is too short for the requested accuracy."""


class NumericError(HistlabError, ArithmeticError):
    """Non-finite values appeared during a computation."""


class SizeError(HistlabError, ValueError):
    """An exhaustive search was requested on a space that is too large."""


class NotConsistentError(HistlabError):
    """Diagonal entries of an inconsistent set were requested as probabilities."""


class ConfigError(HistlabError, ValueError):
    """A scenario configuration could not be parsed or validated."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
