"""Unscented Kalman filtering with per-state sigma-point scaling.

The classic filter spreads all sigma points by one shared factor; here
each state dimension gets its own (alpha, kappa) pair, so states with
very different nonlinearity or noise scales can be spread differently
within one filter. The package also ships the two benchmark systems
and the Monte-Carlo harness used to quantify the effect.
"""

from .errors import (
    AllRunsFailed,
    EstimationError,
    NonFinite,
    NonPositiveLambda,
    NotPositiveDefinite,
    NotSymmetric,
    SingularInnovation,
)
from .harness import (
    ComparisonResult,
    MCConfig,
    MetricsReport,
    SweepResult,
    compare,
    metrics_from_errors,
    per_run_errors,
    run_mc,
    simulate_runs,
    sweep_1d,
    sweep_2d,
)
from .models import (
    ModelSpec,
    Trajectory,
    linear_model,
    servo2d_model,
    sigmoid2d_model,
    simulate,
)
from .scaling import ScalingSet, WeightSet, center_cov_offset, scale_factors, weights
from .sigma import SigmaPointSet, sigma_points, weighted_cov, weighted_mean
from .ukf import (
    FilterConfig,
    StateEstimate,
    UpdateRecord,
    initialize,
    measurement_update,
    run_filter,
    time_update,
)

__version__ = "0.1.0"

__all__ = [
    "AllRunsFailed",
    "ComparisonResult",
    "EstimationError",
    "FilterConfig",
    "MCConfig",
    "MetricsReport",
    "ModelSpec",
    "NonFinite",
    "NonPositiveLambda",
    "NotPositiveDefinite",
    "NotSymmetric",
    "ScalingSet",
    "SigmaPointSet",
    "SingularInnovation",
    "StateEstimate",
    "SweepResult",
    "Trajectory",
    "UpdateRecord",
    "WeightSet",
    "center_cov_offset",
    "compare",
    "initialize",
    "linear_model",
    "measurement_update",
    "metrics_from_errors",
    "per_run_errors",
    "run_filter",
    "run_mc",
    "scale_factors",
    "servo2d_model",
    "sigma_points",
    "sigmoid2d_model",
    "simulate",
    "simulate_runs",
    "sweep_1d",
    "sweep_2d",
    "time_update",
    "weighted_cov",
    "weighted_mean",
    "weights",
]
