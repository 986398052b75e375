"""Sigma-point generation and weighted moment reconstruction.

Points are rows of a (2n+1, n) array: row 0 is the center, rows 1..n
add sqrt(Lambda_i) times column i of the lower Cholesky factor of the
covariance, rows n+1..2n subtract the same deviations. Reconstruction
with the matching weights reproduces the input mean exactly and the
input covariance through the identity

    sum_i w_i(cov) d_i d_i^T = sum_i w_i(mean) d_i d_i^T + gamma d_0 d_0^T

whose gamma term vanishes at generation time because d_0 = 0.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .scaling import WeightSet, scale_factors, weights


@dataclass(frozen=True)
class SigmaPointSet:
    """A set of 2n+1 points with their deviations and weights.

    deviations holds points minus the reference mean: the generating
    mean for a freshly built set (so row 0 is zero and rows pair up as
    +/- d_i), or the weighted mean after the points went through a
    nonlinear map.
    """

    points: np.ndarray
    deviations: np.ndarray
    weights: WeightSet

    @property
    def n(self):
        return self.points.shape[1]


def sigma_points(mean, cov, scaling):
    """Build the 2n+1 scaled sigma points for N(mean, cov).

    Parameters
    ----------
    mean : array, shape (n,)
    cov : array, shape (n, n)
        Symmetric positive definite; factored with a lower Cholesky.
    scaling : ScalingSet

    Returns
    -------
    SigmaPointSet
        Per-state deviation i has Euclidean norm sqrt(Lambda_i) times
        the norm of Cholesky column i.

    Raises
    ------
    NotSymmetric, NotPositiveDefinite
        Propagated from the factorization of cov.
    """
    mean = np.asarray(mean, dtype=float)
    n = mean.shape[0]
    if scaling.n != n:
        raise ValueError(f"scaling is for n={scaling.n}, state has n={n}")
    l_factor = linalg.cholesky(cov)
    spread = np.sqrt(scale_factors(scaling))
    deltas = l_factor * spread[np.newaxis, :]  # column i scaled by sqrt(Lambda_i)
    deviations = np.zeros((2 * n + 1, n))
    deviations[1 : n + 1] = deltas.T
    deviations[n + 1 :] = -deltas.T
    return SigmaPointSet(
        points=mean[np.newaxis, :] + deviations,
        deviations=deviations,
        weights=weights(scaling),
    )


def weighted_mean(point_set, transformed):
    """Weighted sum of transformed points using the mean weights.

    transformed has shape (2n+1, d) for any output dimension d.
    """
    transformed = np.asarray(transformed, dtype=float)
    if transformed.shape[0] != point_set.weights.mean.shape[0]:
        raise ValueError("transformed points do not match the weight count")
    return point_set.weights.mean @ transformed


def weighted_cov(point_set, a, mean_a, b, mean_b, use_mean_weights=False):
    """Weighted cross-covariance sum_i w_i (a_i - mean_a)(b_i - mean_b)^T.

    Covariance weights by default; pass use_mean_weights=True for the
    mean-weight variant (the two differ by gamma times the center
    outer product). The result is not symmetrized here, since a and b
    generally differ.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    w = point_set.weights.mean if use_mean_weights else point_set.weights.cov
    if a.shape[0] != w.shape[0] or b.shape[0] != w.shape[0]:
        raise ValueError("transformed points do not match the weight count")
    da = a - np.asarray(mean_a, dtype=float)[np.newaxis, :]
    db = b - np.asarray(mean_b, dtype=float)[np.newaxis, :]
    return (w[:, np.newaxis] * da).T @ db
