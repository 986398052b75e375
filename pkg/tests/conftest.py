import numpy as np
import pytest

from msukf import ScalingSet


def random_spd(rng, n, scale=1.0):
    a = rng.standard_normal((n, n))
    return a @ a.T + scale * n * np.eye(n)


def random_instance(rng, n=None):
    """One random (mean, cov, ScalingSet) triple with n in 1..6 unless
    pinned, alpha_i in [0.01, 2], kappa_i in [0, 3]."""
    if n is None:
        n = int(rng.integers(1, 7))
    alpha = rng.uniform(0.01, 2.0, size=n)
    kappa = rng.uniform(0.0, 3.0, size=n)
    beta = float(rng.uniform(0.0, 3.0))
    mean = rng.standard_normal(n) * 3.0
    cov = random_spd(rng, n, scale=float(rng.uniform(0.1, 2.0)))
    return mean, cov, ScalingSet(alpha, kappa, beta)


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)
