import numpy as np
import pytest

from msukf import ScalingSet, scale_factors, sigma_points, weighted_cov, weighted_mean
from msukf.errors import NotPositiveDefinite
from msukf import linalg

from conftest import random_instance, random_spd


def test_point_layout_center_plus_minus():
    rng = np.random.default_rng(3)
    mean, cov, scaling = random_instance(rng)
    n = mean.shape[0]
    ps = sigma_points(mean, cov, scaling)
    assert ps.points.shape == (2 * n + 1, n)
    assert np.array_equal(ps.points[0], mean)
    assert np.array_equal(ps.deviations[0], np.zeros(n))
    assert np.array_equal(ps.deviations[1 : n + 1], -ps.deviations[n + 1 :])
    assert np.allclose(ps.points, mean[np.newaxis, :] + ps.deviations)


def test_deviation_norms_scale_with_sqrt_lambda():
    rng = np.random.default_rng(4)
    mean, cov, scaling = random_instance(rng)
    ps = sigma_points(mean, cov, scaling)
    l_factor = linalg.cholesky(cov)
    lam = scale_factors(scaling)
    for i in range(mean.shape[0]):
        expected = np.sqrt(lam[i]) * np.linalg.norm(l_factor[:, i])
        assert np.linalg.norm(ps.deviations[1 + i]) == pytest.approx(expected, rel=1e-12)


def test_mean_reconstruction_is_exact():
    rng = np.random.default_rng(5)
    for _ in range(100):
        mean, cov, scaling = random_instance(rng)
        ps = sigma_points(mean, cov, scaling)
        rec = weighted_mean(ps, ps.points)
        assert np.linalg.norm(rec - mean) <= 1e-9 * (1.0 + np.linalg.norm(mean))


def test_cov_reconstruction_is_exact():
    rng = np.random.default_rng(6)
    for _ in range(100):
        mean, cov, scaling = random_instance(rng)
        ps = sigma_points(mean, cov, scaling)
        rec = weighted_cov(ps, ps.points, mean, ps.points, mean)
        assert np.linalg.norm(rec - cov) <= 1e-9 * np.linalg.norm(cov)


def test_cov_weights_equal_mean_weights_on_fresh_points():
    # gamma multiplies the center outer product, which is zero for a
    # freshly generated set, so both weightings reconstruct the input.
    rng = np.random.default_rng(7)
    mean, cov, scaling = random_instance(rng)
    ps = sigma_points(mean, cov, scaling)
    with_cov_w = weighted_cov(ps, ps.points, mean, ps.points, mean)
    with_mean_w = weighted_cov(ps, ps.points, mean, ps.points, mean, use_mean_weights=True)
    assert np.allclose(with_cov_w, with_mean_w, rtol=0, atol=1e-9 * np.linalg.norm(cov))


def test_scaling_dimension_mismatch():
    scaling = ScalingSet.uniform(1.0, 0.0, 2.0, 3)
    with pytest.raises(ValueError):
        sigma_points(np.zeros(2), np.eye(2), scaling)


def test_indefinite_covariance_propagates_error():
    scaling = ScalingSet.uniform(1.0, 0.0, 2.0, 2)
    with pytest.raises(NotPositiveDefinite):
        sigma_points(np.zeros(2), np.diag([1.0, -1.0]), scaling)


def test_weighted_mean_checks_point_count():
    rng = np.random.default_rng(8)
    mean, cov, scaling = random_instance(rng)
    ps = sigma_points(mean, cov, scaling)
    with pytest.raises(ValueError):
        weighted_mean(ps, ps.points[:-1])


def test_weighted_cov_cross_shape():
    # cross-covariance of points against a linear image has shape (n, d)
    rng = np.random.default_rng(9)
    n = 3
    mean = rng.standard_normal(n)
    cov = random_spd(rng, n)
    scaling = ScalingSet.uniform(0.9, 0.0, 2.0, n)
    ps = sigma_points(mean, cov, scaling)
    g = rng.standard_normal((2, n))
    imaged = ps.points @ g.T
    cross = weighted_cov(ps, ps.points, mean, imaged, g @ mean)
    assert cross.shape == (n, 2)
    assert np.allclose(cross, cov @ g.T, rtol=1e-9, atol=1e-12)
