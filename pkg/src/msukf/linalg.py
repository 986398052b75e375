"""Small dense-matrix helpers shared by the filter and the harness.

Everything here wraps numpy; the value added is validation with
package-specific exceptions and a fixed lower-triangular convention.
"""

import numpy as np

from .errors import NotPositiveDefinite, NotSymmetric

# Relative asymmetry above this is treated as a caller bug, not roundoff.
SYMMETRY_RTOL = 1e-9


def symmetrize(a):
    """Return 0.5 * (a + a.T). Exactly symmetric for finite input."""
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


def check_symmetric(a, rtol=SYMMETRY_RTOL):
    """Raise NotSymmetric if ||a - a.T|| exceeds rtol * ||a||."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {a.shape}")
    denom = np.linalg.norm(a)
    if denom == 0.0:
        return
    if np.linalg.norm(a - a.T) > rtol * denom:
        raise NotSymmetric("matrix is not symmetric within tolerance")


def cholesky(p):
    """Lower-triangular L with L @ L.T == p.

    Raises NotSymmetric for asymmetric input and NotPositiveDefinite
    when the factorization hits a non-positive pivot (this includes
    inputs containing NaN or infinity).
    """
    p = np.asarray(p, dtype=float)
    check_symmetric(p)
    if not np.all(np.isfinite(p)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    try:
        return np.linalg.cholesky(p)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc


def column(l_factor, i):
    """Copy of column i (0-based) of a factor or any 2-D array."""
    l_factor = np.asarray(l_factor, dtype=float)
    n = l_factor.shape[1]
    if not 0 <= i < n:
        raise IndexError(f"column index {i} out of range for n={n}")
    return l_factor[:, i].copy()


def is_positive_definite(p):
    """True when a symmetric matrix admits a Cholesky factorization."""
    try:
        cholesky(p)
    except (NotPositiveDefinite, NotSymmetric):
        return False
    return True


def psd_sqrt(q):
    """Some B with B @ B.T == q, for positive SEMIdefinite q.

    Used to shape noise draws, where singular covariances (including
    all-zero ones) are legitimate. Prefers the Cholesky factor; falls
    back to an eigenvalue square root with negatives clipped at a
    roundoff-level threshold.
    """
    q = np.asarray(q, dtype=float)
    check_symmetric(q)
    if not q.any():
        return np.zeros_like(q)
    try:
        return np.linalg.cholesky(q)
    except np.linalg.LinAlgError:
        pass
    w, v = np.linalg.eigh(symmetrize(q))
    floor = -1e-12 * max(w.max(), 0.0)
    if w.min() < floor:
        raise NotPositiveDefinite("matrix has a significantly negative eigenvalue")
    return v * np.sqrt(np.clip(w, 0.0, None))
