"""Exception hierarchy shared across the package.

The CLI maps :class:`ValidationError` to exit code 1 and
:class:`ArchiveIOError` (and plain ``OSError``) to exit code 2.
"""


class RomTreeError(Exception):
    """Base class for all package errors."""


class ValidationError(RomTreeError, ValueError):
    """Input violates a documented precondition or invariant."""


class DimensionMismatch(ValidationError):
    pass


class NonFiniteValue(ValidationError):
    pass


class RankError(ValidationError):
    """Requested rank is infeasible for the given data."""


class LogMapUndefined(ValidationError):
    """The Grassmann logarithm does not exist for a pair of subspaces."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class UndefinedCorrelation(ValidationError):
    """Pearson correlation requested on a zero-variance sample."""


class SvdConvergenceError(RomTreeError, ArithmeticError):
    pass


class ArchiveIOError(RomTreeError, OSError):
    """Archive or tree file is missing, unreadable or corrupt."""
