"""Exception types shared across the package."""


class NcInterpError(Exception):
    """Base class for all package-specific errors."""


class InvalidDataError(NcInterpError, ValueError):
    """Problem data violates a structural invariant (bad set, bad shape, ...)."""


class DimensionMismatchError(NcInterpError, ValueError):
    """Operands have incompatible matrix or tuple dimensions."""


class SingularSeriesError(NcInterpError, ArithmeticError):
    """A series inversion hit a (numerically) singular constant term."""


class ResourceCapError(NcInterpError, RuntimeError):
    """An enumeration or evaluation would exceed a configured size cap."""


class DataInconsistentError(InvalidDataError):
    """Degenerate reduction found data incompatible with any solution.

    Raised when the constant coefficient is singular but some coefficient
    does not vanish on its kernel; such data admits no solution at all.
    """

    def __init__(self, message, word=None, residual=None):
        super().__init__(message)
        self.word = word
        self.residual = residual
