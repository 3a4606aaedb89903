"""Exception hierarchy.

Every failure raised by the library derives from :class:`QuadgapError`, so
callers (the CLI in particular) can map families of errors to exit codes.
"""


class QuadgapError(Exception):
    """Base class for all library errors."""


class DomainError(QuadgapError, ValueError):
    """Input outside the mathematical domain of an operation."""


class NumericalAmbiguity(QuadgapError):
    """A discrete decision could not be made reliably in floating point."""


class DimensionMismatch(DomainError):
    pass


class AsymmetricSymbol(DomainError):
    pass


class ZeroParameter(DomainError):
    pass


class TemperatureDomain(DomainError):
    pass


class ParameterDomain(DomainError):
    pass


class TruncationTooSmall(DomainError):
    pass


class BasisMismatch(DomainError):
    pass


class SingularSpaceNonzero(QuadgapError):
    """Raised when an operation needs S = {0} but the symbol has S != {0}."""

    def __init__(self, message, basis=None):
        super().__init__(message)
        self.basis = basis


class RankAmbiguous(NumericalAmbiguity):
    pass


class QuadratureUnconverged(NumericalAmbiguity):
    pass


class Inconclusive(NumericalAmbiguity):
    pass


class PairingViolation(NumericalAmbiguity):
    pass


class RealEigenvalue(NumericalAmbiguity):
    pass


class EmptyCluster(QuadgapError):
    pass


class BlockSingular(NumericalAmbiguity):
    pass


class PositivityFailure(NumericalAmbiguity):
    pass


class NotPositiveDefinite(NumericalAmbiguity):
    pass


class NotConverged(NumericalAmbiguity):
    pass


class SemigroupOverflow(NumericalAmbiguity):
    pass


class UnstableDrift(DomainError):
    pass


class FitWindowTooShort(NumericalAmbiguity):
    pass
