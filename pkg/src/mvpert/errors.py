"""Exception and warning types raised across the package."""


class MvpertError(Exception):
    """Base class for all package errors."""


# correlation matrices

class CorrelationMatrixError(MvpertError, ValueError):
    """Input matrix failed validation."""

    invariant = "correlation matrix"


class DimensionTooSmall(CorrelationMatrixError):
    invariant = "dimension"


class NotSymmetric(CorrelationMatrixError):
    invariant = "symmetric"


class NotUnitDiagonal(CorrelationMatrixError):
    invariant = "unit diagonal"


class OffDiagonalOutOfRange(CorrelationMatrixError):
    invariant = "off-diagonal magnitude"


class NotPositiveDefinite(CorrelationMatrixError):
    invariant = "positive definite"

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class InverseCheckFailed(CorrelationMatrixError):
    invariant = "inverse check"


class CutoffTooLarge(CorrelationMatrixError):
    invariant = "eigenvalue cutoff"


# one-factor construction

class OneFactorError(MvpertError, ValueError):
    pass


class LoadingOutOfRange(OneFactorError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class RhoFNotPositiveDefinite(OneFactorError):
    pass


class ZeroDiagonalWeight(OneFactorError):
    pass


# numerics

class RootNotBracketed(MvpertError):
    pass


class ClassCountMismatch(MvpertError, AssertionError):
    pass


class PadePole(MvpertError, ZeroDivisionError):
    pass


class NoValidAlpha(MvpertError):
    pass


class DimensionTooLarge(MvpertError, ValueError):
    pass


class CholeskyFailure(MvpertError):
    pass


# warnings

class MvpertWarning(UserWarning):
    pass


class QuadratureUnderResolved(MvpertWarning):
    pass


class YIntegralUnderResolved(MvpertWarning):
    pass


class LoadingClipped(MvpertWarning):
    pass


class SymmetrizedInput(MvpertWarning):
    pass
