"""Unscented Kalman filter cycle built on per-state scaled sigma points.

One cycle from the posterior at step k to the posterior at step k+1:

1. generate sigma points from (mean_k, P_k),
2. push them through the process map f, reconstruct the predicted
   mean and covariance (plus additive Q),
3. push the SAME propagated points through the measurement map h,
   reconstruct the predicted measurement, the innovation covariance
   S (plus additive R) and the cross covariance,
4. gain K = P_xz S^-1, posterior mean = predicted + K (z - z_hat),
   posterior covariance = predicted - K S K^T.

Sigma points are generated once per cycle; time and measurement update
share them. A covariance that fails to factor gets one diagonal jitter
retry scaled by its trace, after which the cycle raises.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg as sla

from . import linalg
from .errors import NonFinite, NotPositiveDefinite, SingularInnovation
from .models import ModelSpec
from .scaling import ScalingSet
from .sigma import SigmaPointSet, sigma_points, weighted_cov, weighted_mean


@dataclass(frozen=True)
class StateEstimate:
    """Gaussian belief (mean, cov) attached to time step `step`."""

    mean: np.ndarray
    cov: np.ndarray
    step: int


@dataclass(frozen=True)
class FilterConfig:
    """Everything a filter run needs besides the measurements.

    jitter_relative scales the one-shot diagonal recovery term added
    when a covariance fails its Cholesky factorization: each diagonal
    entry grows by jitter_relative * trace(P) / n before the single
    retry.
    """

    model: ModelSpec
    scaling: ScalingSet
    jitter_relative: float = 1e-9


@dataclass(frozen=True)
class UpdateRecord:
    """Predicted and posterior estimates for one step.

    innovation, innovation_cov and gain are None when the step had no
    measurement (the posterior then equals the prediction).
    """

    predicted: StateEstimate
    posterior: StateEstimate
    innovation: Optional[np.ndarray] = None
    innovation_cov: Optional[np.ndarray] = None
    gain: Optional[np.ndarray] = None


def initialize(mean, cov, config):
    """Validate and wrap the initial belief at step 0.

    cov must be symmetric positive definite; no jitter is applied here
    since a bad prior is a configuration error, not a numerical one.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if mean.shape != (config.model.n,):
        raise ValueError(f"mean has shape {mean.shape}, expected ({config.model.n},)")
    linalg.cholesky(cov)
    return StateEstimate(mean=mean.copy(), cov=cov.copy(), step=0)


def _sigma_points_with_retry(mean, cov, config):
    try:
        return sigma_points(mean, cov, config.scaling)
    except NotPositiveDefinite:
        bump = config.jitter_relative * np.trace(cov) / config.model.n
        if not bump > 0.0:
            raise
        jittered = cov + bump * np.eye(config.model.n)
        return sigma_points(mean, jittered, config.scaling)


def time_update(estimate, config):
    """Propagate a posterior belief one step through the process map.

    Parameters
    ----------
    estimate : StateEstimate
        Posterior at step k.
    config : FilterConfig

    Returns
    -------
    (StateEstimate, SigmaPointSet)
        The prediction at step k+1 and the propagated sigma points
        (with deviations taken about the predicted mean), which the
        measurement update reuses.
    """
    point_set = _sigma_points_with_retry(estimate.mean, estimate.cov, config)
    propagated = np.asarray(config.model.f(point_set.points, estimate.step), dtype=float)
    if not np.all(np.isfinite(propagated)):
        raise NonFinite(f"process map produced non-finite values at step {estimate.step}")
    pred_mean = weighted_mean(point_set, propagated)
    pred_cov = linalg.symmetrize(
        weighted_cov(point_set, propagated, pred_mean, propagated, pred_mean)
        + config.model.Q
    )
    predicted = StateEstimate(mean=pred_mean, cov=pred_cov, step=estimate.step + 1)
    propagated_set = SigmaPointSet(
        points=propagated,
        deviations=propagated - pred_mean[np.newaxis, :],
        weights=point_set.weights,
    )
    return predicted, propagated_set


def measurement_update(predicted, propagated, measurement, config):
    """Fold one measurement into a prediction.

    Parameters
    ----------
    predicted : StateEstimate
        Output of time_update at this step.
    propagated : SigmaPointSet
        The propagated points returned alongside it.
    measurement : array, shape (m,)
    config : FilterConfig

    Returns
    -------
    UpdateRecord

    Raises
    ------
    SingularInnovation
        If S = sum w (z_i - z_hat)(z_i - z_hat)^T + R cannot be
        factored.
    NonFinite
        If the measurement map produces NaN or infinity.
    """
    measurement = np.asarray(measurement, dtype=float)
    in_meas = np.asarray(config.model.h(propagated.points), dtype=float)
    if not np.all(np.isfinite(in_meas)):
        raise NonFinite(f"measurement map produced non-finite values at step {predicted.step}")
    z_hat = weighted_mean(propagated, in_meas)
    s_cov = linalg.symmetrize(
        weighted_cov(propagated, in_meas, z_hat, in_meas, z_hat) + config.model.R
    )
    cross = weighted_cov(
        propagated, propagated.points, predicted.mean, in_meas, z_hat
    )
    try:
        s_factor = sla.cho_factor(s_cov, lower=True)
    except sla.LinAlgError as exc:
        raise SingularInnovation(str(exc)) from exc
    gain = sla.cho_solve(s_factor, cross.T).T
    innovation = measurement - z_hat
    post_mean = predicted.mean + gain @ innovation
    post_cov = linalg.symmetrize(predicted.cov - gain @ s_cov @ gain.T)
    posterior = StateEstimate(mean=post_mean, cov=post_cov, step=predicted.step)
    return UpdateRecord(
        predicted=predicted,
        posterior=posterior,
        innovation=innovation,
        innovation_cov=s_cov,
        gain=gain,
    )


def run_filter(config, measurements, init_mean=None, init_cov=None):
    """Run the full cycle over a measurement sequence.

    Parameters
    ----------
    config : FilterConfig
    measurements : sequence of array or None
        Entry k is the measurement at step k+1; None marks a gap, in
        which case the posterior for that step is the prediction.
    init_mean, init_cov : array, optional
        Initial belief; defaults to the model's (x0_true, P0).

    Returns
    -------
    list of UpdateRecord
        One record per entry of `measurements`, in step order.
    """
    if init_mean is None:
        init_mean = config.model.x0_true
    if init_cov is None:
        init_cov = config.model.P0
    estimate = initialize(init_mean, init_cov, config)
    records = []
    for z in measurements:
        predicted, propagated = time_update(estimate, config)
        if z is None:
            record = UpdateRecord(predicted=predicted, posterior=predicted)
        else:
            record = measurement_update(predicted, propagated, z, config)
        records.append(record)
        estimate = record.posterior
    return records
