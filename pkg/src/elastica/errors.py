"""Exception types raised across the package."""


class ElasticaError(Exception):
    """Base class for all package-specific errors."""


class AllPointsIdenticalError(ElasticaError):
    """Every input point coincides with the first one; no curve exists."""


class DimensionMismatchError(ElasticaError):
    """Operands live in different ambient dimensions."""


class OutOfDomainError(ElasticaError):
    """Evaluation point lies outside [0, 1]."""


class GridTooLargeError(ElasticaError):
    """Brute-force grid exceeds the supported exhaustive-search size."""


class RankDeficientError(ElasticaError):
    """Design matrix is rank deficient.

    ``columns`` names the offending design columns when they could be
    identified.
    """

    def __init__(self, message, columns=None):
        super().__init__(message)
        self.columns = list(columns) if columns is not None else []


class DegeneratePredictionError(ElasticaError):
    """A predicted SRV curve vanishes almost everywhere."""


class SingularCovarianceError(ElasticaError):
    """Empirical covariate covariance is singular."""


class ZeroTotalVariationError(ElasticaError):
    """All response curves coincide up to re-parametrization."""


class DegreesOfFreedomError(ElasticaError):
    """Too few observations for the requested adjustment (n <= k + 1)."""


class InsufficientSamplesError(ElasticaError):
    """Not enough bootstrap samples for the requested confidence level."""


class NotFittedError(ElasticaError):
    """Estimator method requires a prior call to ``fit``."""
