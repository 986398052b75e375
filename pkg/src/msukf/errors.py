"""Exception types raised by the estimation and benchmark code."""


class EstimationError(Exception):
    """Base class for all errors raised by this package."""


class NotSymmetric(EstimationError):
    """A matrix required to be symmetric is not, beyond tolerance."""


class NotPositiveDefinite(EstimationError):
    """A matrix required to be positive definite has a non-positive pivot."""


class NonPositiveLambda(EstimationError):
    """A per-state scale factor alpha_i**2 * (n + kappa_i) is not positive."""


class SingularInnovation(EstimationError):
    """The innovation covariance cannot be factored, so no gain exists."""


class NonFinite(EstimationError):
    """A model map produced NaN or infinity."""


class AllRunsFailed(EstimationError):
    """Every Monte-Carlo run of a candidate failed; no metrics exist."""
