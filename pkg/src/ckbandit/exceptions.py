"""Exception hierarchy shared across the package."""


class CKBError(Exception):
    """Base class for all errors raised by ckbandit."""


class InvalidInputError(CKBError, ValueError):
    """Argument outside the documented domain of an operation."""


class NumericalDegeneracyError(CKBError, ArithmeticError):
    """A factorization met a non-positive pivot or a clearly negative variance.

    Parameters
    ----------
    message : str
        Human readable description.
    value : float, optional
        The offending pivot or variance.
    """

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class InfeasibleError(CKBError):
    """No distribution over the domain satisfies the (shifted) constraint."""


class GenerationError(CKBError):
    """Synthetic environment generation exhausted its retry budget."""


class DatasetParseError(CKBError, ValueError):
    """A dataset CSV could not be parsed.

    ``row`` and ``column`` locate the problem (1-based row counting the header).
    """

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class ConfigError(CKBError, ValueError):
    """Experiment configuration is missing a key or holds an invalid value."""
