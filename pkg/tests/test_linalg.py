import numpy as np
import pytest

from msukf import linalg
from msukf.errors import NotPositiveDefinite, NotSymmetric


def random_spd(rng, n, scale=1.0):
    a = rng.standard_normal((n, n))
    return a @ a.T + scale * n * np.eye(n)


def test_symmetrize_is_exactly_symmetric():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((5, 5))
    s = linalg.symmetrize(a)
    assert np.array_equal(s, s.T)
    assert np.allclose(s, 0.5 * (a + a.T))


def test_check_symmetric_accepts_roundoff_level_asymmetry():
    a = np.eye(3)
    a[0, 1] = 1e-13
    linalg.check_symmetric(a)


def test_check_symmetric_rejects_gross_asymmetry():
    a = np.eye(3)
    a[0, 1] = 0.5
    with pytest.raises(NotSymmetric):
        linalg.check_symmetric(a)


def test_check_symmetric_rejects_non_square():
    with pytest.raises(NotSymmetric):
        linalg.check_symmetric(np.ones((2, 3)))


def test_cholesky_reconstructs_input():
    rng = np.random.default_rng(1)
    for n in (1, 2, 5):
        p = random_spd(rng, n)
        l_factor = linalg.cholesky(p)
        assert np.allclose(np.triu(l_factor, 1), 0.0)
        assert np.allclose(l_factor @ l_factor.T, p, rtol=1e-12, atol=1e-12)


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        linalg.cholesky(np.diag([1.0, -1.0]))


def test_cholesky_rejects_nan():
    p = np.eye(2)
    p[1, 1] = np.nan
    # NaN breaks symmetry comparisons too; either typed error is correct
    with pytest.raises((NotPositiveDefinite, NotSymmetric)):
        linalg.cholesky(p)


def test_column_is_zero_based_copy():
    a = np.arange(9.0).reshape(3, 3)
    col = linalg.column(a, 0)
    assert np.array_equal(col, [0.0, 3.0, 6.0])
    col[0] = 99.0
    assert a[0, 0] == 0.0
    with pytest.raises(IndexError):
        linalg.column(a, 3)


def test_is_positive_definite():
    assert linalg.is_positive_definite(np.eye(2))
    assert not linalg.is_positive_definite(np.diag([1.0, 0.0]))
    assert not linalg.is_positive_definite(np.array([[1.0, 0.5], [0.2, 1.0]]))


def test_psd_sqrt_handles_definite_singular_and_zero():
    rng = np.random.default_rng(2)
    p = random_spd(rng, 3)
    b = linalg.psd_sqrt(p)
    assert np.allclose(b @ b.T, p, rtol=1e-12, atol=1e-12)

    singular = np.diag([1.0, 0.0, 4.0])
    b = linalg.psd_sqrt(singular)
    assert np.allclose(b @ b.T, singular, atol=1e-12)

    z = np.zeros((2, 2))
    assert np.array_equal(linalg.psd_sqrt(z), z)


def test_psd_sqrt_rejects_clearly_negative():
    with pytest.raises(NotPositiveDefinite):
        linalg.psd_sqrt(np.diag([1.0, -0.5]))
