"""Dense symmetric linear algebra: smallest eigenpairs and SPD solves.

Both kernels are thin, deterministic wrappers around LAPACK (via
``scipy.linalg``) with the sign and error conventions the rest of the
package relies on.
"""

import numpy as np
import scipy.linalg

__all__ = [
    "EigenSolverError",
    "NotPositiveDefiniteError",
    "as_symmetric",
    "symmetric_eigen",
    "spd_factor",
    "spd_solve",
    "spd_rcond",
]


class EigenSolverError(RuntimeError):
    """Raised when the symmetric eigensolver fails to converge."""


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a Cholesky factorization fails."""


def as_symmetric(A):
    """Return ``(A + A.T) / 2`` as a float array, checking it is square."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return 0.5 * (A + A.T)


def _normalize_signs(V):
    # largest-magnitude entry of each column made positive; magnitudes equal
    # up to round-off count as ties and the first index wins
    mags = np.abs(V)
    idx = np.argmax(mags >= mags.max(axis=0) * (1 - 1e-12), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def symmetric_eigen(A, d):
    """Smallest ``d`` eigenpairs of a symmetric matrix.

    Parameters
    ----------
    A : (N, N) array_like
        Symmetric matrix; symmetrized on entry.
    d : int
        Number of eigenpairs, ``1 <= d <= N``.

    Returns
    -------
    values : (d,) ndarray
        Algebraically smallest eigenvalues, ascending.
    vectors : (N, d) ndarray
        Orthonormal eigenvectors, each column signed so that its
        largest-magnitude entry is positive.
    """
    A = as_symmetric(A)
    N = A.shape[0]
    if not (isinstance(d, (int, np.integer)) and 1 <= d <= N):
        raise ValueError(f"d must be an integer in [1, {N}], got {d!r}")
    if not np.all(np.isfinite(A)):
        raise EigenSolverError("matrix has non-finite entries")
    try:
        values, vectors = scipy.linalg.eigh(
            A, subset_by_index=[0, d - 1], driver="evr", check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigensolver did not converge: {exc}") from exc
    return values, _normalize_signs(vectors)


def spd_factor(M):
    """Cholesky factor of a symmetric positive definite matrix.

    Returns the ``(c, lower)`` pair accepted by :func:`scipy.linalg.cho_solve`.
    Raises :class:`NotPositiveDefiniteError` if the matrix is not numerically
    positive definite.
    """
    M = as_symmetric(M)
    if not np.all(np.isfinite(M)):
        raise NotPositiveDefiniteError("matrix has non-finite entries")
    try:
        return scipy.linalg.cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc


def spd_solve(M, B):
    """Solve ``M X = B`` for symmetric positive definite ``M``."""
    B = np.asarray(B, dtype=float)
    factor = spd_factor(M)
    if B.shape[0] != factor[0].shape[0]:
        raise ValueError(
            f"right-hand side has {B.shape[0]} rows, matrix is "
            f"{factor[0].shape[0]}x{factor[0].shape[0]}")
    return scipy.linalg.cho_solve(factor, B, check_finite=False)


def spd_rcond(M, factor):
    """Reciprocal 1-norm condition estimate of ``M`` from its Cholesky factor."""
    c, lower = factor
    anorm = np.max(np.sum(np.abs(M), axis=0))
    rcond, info = scipy.linalg.lapack.dpocon(c, anorm, uplo="L" if lower else "U")
    if info != 0:
        raise NotPositiveDefiniteError(f"condition estimate failed (info={info})")
    return float(rcond)
