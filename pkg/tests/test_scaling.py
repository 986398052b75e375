import math

import numpy as np
import pytest

from msukf import ScalingSet, center_cov_offset, scale_factors, weights
from msukf.errors import NonPositiveLambda

from conftest import random_instance


# Hand-computed reference set used throughout: n=2, alpha=(2, 0.01),
# kappa=0, beta=2.
#   Lambda = (2^2*2, 0.01^2*2) = (8, 2e-4)
#   w_1 = w_3 = 1/16 = 0.0625, w_2 = w_4 = 1/4e-4 = 2500
#   w_0(mean) = 1 - 2*(0.0625 + 2500) = -4999.125
#   gamma = 1 - (2*0.01)^(2/2) + 2 = 2.98
#   w_0(cov) = -4999.125 + 2.98 = -4996.145
REF = ScalingSet(np.array([2.0, 0.01]), np.zeros(2), 2.0)


def test_reference_scale_factors():
    assert np.array_equal(scale_factors(REF), [8.0, 2e-4])


def test_reference_gamma():
    assert center_cov_offset(REF) == pytest.approx(2.98, abs=1e-15)


def test_reference_weights():
    w = weights(REF)
    assert np.array_equal(w.mean[1:], [0.0625, 2500.0, 0.0625, 2500.0])
    assert w.mean[0] == pytest.approx(-4999.125, abs=1e-12)
    assert w.cov[0] == pytest.approx(-4996.145, abs=1e-12)
    assert np.array_equal(w.cov[1:], w.mean[1:])
    assert w.gamma == pytest.approx(2.98, abs=1e-15)


def test_scalars_broadcast_to_vectors():
    s = ScalingSet(alpha=np.array([0.5, 0.5, 0.5]), kappa=1.0, beta=2.0)
    assert s.n == 3
    assert np.array_equal(s.kappa, np.ones(3))
    assert s.is_uniform()


def test_uniform_constructor_and_predicate():
    s = ScalingSet.uniform(1.3, 0.5, 2.0, 4)
    assert s.n == 4
    assert s.is_uniform()
    mixed = ScalingSet(np.array([1.3, 1.2]), np.zeros(2), 2.0)
    assert not mixed.is_uniform()


def test_fields_are_read_only():
    s = ScalingSet.uniform(1.0, 0.0, 2.0, 2)
    with pytest.raises(ValueError):
        s.alpha[0] = 5.0


def test_rejects_non_positive_alpha():
    with pytest.raises(NonPositiveLambda):
        ScalingSet(np.array([1.0, 0.0]), np.zeros(2), 2.0)
    with pytest.raises(NonPositiveLambda):
        ScalingSet(np.array([1.0, -0.5]), np.zeros(2), 2.0)


def test_rejects_kappa_making_lambda_non_positive():
    # n=2, kappa=-2 gives Lambda = alpha^2 * 0
    with pytest.raises(NonPositiveLambda):
        ScalingSet(np.array([1.0, 1.0]), np.array([0.0, -2.0]), 2.0)


def test_rejects_non_finite_parameters():
    with pytest.raises(ValueError):
        ScalingSet(np.array([1.0, np.nan]), np.zeros(2), 2.0)
    with pytest.raises(ValueError):
        ScalingSet(np.array([1.0, 1.0]), np.zeros(2), math.inf)


def test_uniform_weights_match_classic_parameterization():
    # Classic single-scale form: lambda = a^2 (n+k) - n, c = n + lambda,
    # w_i = 1/(2c), w_0 = lambda/c, w_0(cov) = w_0 + 1 - a^2 + beta.
    # Computing c as n + lambda cancels for small a (relative error up
    # to ~eps*n/c), so the comparison cannot be tighter than ~1e-12.
    for n in (1, 2, 5):
        for a, k, beta in [(1.0, 0.0, 2.0), (0.01, 0.0, 2.0), (1.6, 3.0, 1.0)]:
            w = weights(ScalingSet.uniform(a, k, beta, n))
            lam = a**2 * (n + k) - n
            c = n + lam
            assert w.mean[1:] == pytest.approx(np.full(2 * n, 1.0 / (2 * c)), rel=1e-10)
            assert w.mean[0] == pytest.approx(lam / c, rel=1e-11, abs=1e-11)
            assert w.cov[0] == pytest.approx(lam / c + 1 - a**2 + beta, rel=1e-11, abs=1e-11)


def test_mean_weights_sum_to_one_exactly_enough():
    rng = np.random.default_rng(7)
    for _ in range(300):
        _, _, scaling = random_instance(rng)
        w = weights(scaling)
        assert abs(math.fsum(w.mean) - 1.0) <= 1e-12


def test_cov_weights_differ_only_by_gamma_at_center():
    rng = np.random.default_rng(8)
    for _ in range(50):
        _, _, scaling = random_instance(rng)
        w = weights(scaling)
        assert w.cov[0] - w.mean[0] == pytest.approx(w.gamma, rel=1e-12, abs=1e-12)
        assert np.array_equal(w.cov[1:], w.mean[1:])


def test_paired_weights_are_equal():
    rng = np.random.default_rng(9)
    for _ in range(50):
        _, _, scaling = random_instance(rng)
        w = weights(scaling)
        n = scaling.n
        assert np.array_equal(w.mean[1 : n + 1], w.mean[n + 1 :])
