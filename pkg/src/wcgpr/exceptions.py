"""Exception hierarchy shared by all modules."""


class WCGPRError(Exception):
    """Base class for every error raised by this package."""


class StructuralError(WCGPRError, ValueError):
    """Input shapes or structural invariants are violated."""


class NumericalStructureError(StructuralError):
    """A numerically checked structure (Hermitian, real residual) failed."""


class SingularMatrixError(WCGPRError, ArithmeticError):
    """A covariance matrix could not be factorized, even after jitter."""
