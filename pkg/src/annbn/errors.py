"""Exception and warning types raised across the package."""


class AnnbnError(Exception):
    """Base class for all package errors."""


class NonFinite(AnnbnError, ValueError):
    pass


class ShapeMismatch(AnnbnError, ValueError):
    pass


class LengthMismatch(AnnbnError, ValueError):
    pass


class ParseError(AnnbnError, ValueError):
    """A data or problem file could not be parsed.

    ``line`` and ``column`` are 1-based when known.
    """

    def __init__(self, message, line=None, column=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.column = column


class MissingColumn(AnnbnError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "missing column"


class BadMagic(AnnbnError, ValueError):
    pass


class CountMismatch(AnnbnError, ValueError):
    pass


class ConstantTarget(AnnbnError, ValueError):
    pass


class TooFewObservations(AnnbnError, ValueError):
    pass


class UnsupportedDimension(AnnbnError, ValueError):
    pass


class UnsupportedOrder(AnnbnError, ValueError):
    pass


class FormatVersionError(AnnbnError, ValueError):
    pass


class RankDeficientWarning(UserWarning):
    """A local system was singular and solved by pseudo-inverse."""


class SingularKernelWarning(RankDeficientWarning):
    pass


class NullspaceWarning(UserWarning):
    """A PDE problem has no boundary rows to pin down its solution."""
