"""Per-state sigma-point scaling and the weights it induces.

The classic unscented transform spreads every sigma point by the same
factor sqrt(n + lambda), lambda = alpha**2 * (n + kappa) - n. Here each
state dimension i gets its own pair (alpha_i, kappa_i), hence its own

    Lambda_i = alpha_i**2 * (n + kappa_i)

which plays the role of n + lambda along that axis. The induced weights
keep the transform exact for means and covariances of linear maps:

    w_i = w_{n+i} = 1 / (2 * Lambda_i)          i = 1..n
    w_0(mean) = 1 - sum_i 1 / Lambda_i
    w_0(cov)  = w_0(mean) + gamma
    gamma     = 1 - (prod_i alpha_i)**(2/n) + beta

With all alphas and kappas equal this reduces exactly to the classic
single-scale weights.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveLambda


def _frozen_vector(value, n, name):
    out = np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} must be finite")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ScalingSet:
    """Per-state spread parameters for one filter instance.

    alpha and kappa are length-n vectors (scalars broadcast); beta is a
    single scalar applied to the center covariance weight. Construction
    fails with NonPositiveLambda unless every alpha_i**2 * (n + kappa_i)
    is strictly positive.
    """

    alpha: np.ndarray
    kappa: np.ndarray
    beta: float = 2.0

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        kappa = np.asarray(self.kappa, dtype=float)
        n = alpha.shape[0]
        object.__setattr__(self, "alpha", _frozen_vector(alpha, n, "alpha"))
        object.__setattr__(self, "kappa", _frozen_vector(kappa, n, "kappa"))
        object.__setattr__(self, "beta", float(self.beta))
        if not math.isfinite(self.beta):
            raise ValueError("beta must be finite")
        if np.any(self.alpha <= 0.0):
            raise NonPositiveLambda("every alpha_i must be strictly positive")
        if np.any(self.alpha**2 * (n + self.kappa) <= 0.0):
            raise NonPositiveLambda(
                "alpha_i**2 * (n + kappa_i) must be strictly positive for every state"
            )

    @property
    def n(self):
        """State dimension."""
        return self.alpha.shape[0]

    @classmethod
    def uniform(cls, alpha, kappa, beta, n):
        """Classic single-scale parameters expressed as a per-state set."""
        return cls(np.full(n, float(alpha)), np.full(n, float(kappa)), beta)

    def is_uniform(self):
        """True when all states share one (alpha, kappa) pair."""
        return bool(
            np.all(self.alpha == self.alpha[0]) and np.all(self.kappa == self.kappa[0])
        )


def scale_factors(scaling):
    """Per-state factors Lambda_i = alpha_i**2 * (n + kappa_i), shape (n,)."""
    n = scaling.n
    return scaling.alpha**2 * (n + scaling.kappa)


def center_cov_offset(scaling):
    """gamma = 1 - (prod alpha_i)**(2/n) + beta, added to the center cov weight."""
    n = scaling.n
    return 1.0 - float(np.prod(scaling.alpha)) ** (2.0 / n) + scaling.beta


@dataclass(frozen=True)
class WeightSet:
    """Mean and covariance weights for the 2n+1 sigma points.

    Index 0 is the center point; 1..n the positive deviations; n+1..2n
    the negative ones. mean sums to 1 by construction; cov differs from
    mean only at index 0, by gamma.
    """

    mean: np.ndarray
    cov: np.ndarray
    gamma: float

    def __post_init__(self):
        k = self.mean.shape[0]
        object.__setattr__(self, "mean", _frozen_vector(self.mean, k, "mean"))
        object.__setattr__(self, "cov", _frozen_vector(self.cov, k, "cov"))
        object.__setattr__(self, "gamma", float(self.gamma))


def weights(scaling):
    """WeightSet induced by a ScalingSet.

    The center mean weight is the exact complement of the others
    (accumulated with math.fsum, since 1/(2*Lambda_i) can reach ~1e4
    for small alphas and naive summation would shed precision).
    """
    lam = scale_factors(scaling)
    if np.any(lam <= 0.0):
        raise NonPositiveLambda("scale factors must be strictly positive")
    half = 1.0 / (2.0 * lam)
    w_mean = np.concatenate(([0.0], half, half))
    w_mean[0] = 1.0 - math.fsum(w_mean[1:])
    gamma = center_cov_offset(scaling)
    w_cov = w_mean.copy()
    w_cov[0] = w_mean[0] + gamma
    return WeightSet(mean=w_mean, cov=w_cov, gamma=gamma)
