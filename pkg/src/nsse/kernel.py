"""Gaussian RBF kernel matrices and their regularized solves."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .graph import sq_distances
from .numerics import NotPositiveDefiniteError, spd_factor, spd_rcond

__all__ = [
    "RIDGE_LADDER",
    "KernelConditioningError",
    "KernelSystem",
    "gaussian",
    "kernel_matrix",
    "regularized_system",
    "quad_form_inv_sq",
    "kernel_lipschitz",
]

RIDGE_LADDER = (1e-8, 1e-6, 1e-4)
MIN_RCOND = np.finfo(float).eps


class KernelConditioningError(NotPositiveDefiniteError):
    """The kernel matrix stays numerically singular after ridge escalation."""


def _check_sigma(sigma):
    if not (np.isfinite(sigma) and sigma > 0):
        raise ValueError(f"sigma must be positive and finite, got {sigma!r}")


def gaussian(sq_dist, sigma):
    """``exp(-r^2 / sigma^2)`` evaluated on squared distances."""
    _check_sigma(sigma)
    return np.exp(-np.asarray(sq_dist, dtype=float) / (sigma * sigma))


def kernel_matrix(X, sigma, Z=None):
    """Gaussian kernel between the rows of ``X`` (and ``Z``, if given)."""
    K = gaussian(sq_distances(X, Z), sigma)
    if Z is None:
        K = 0.5 * (K + K.T)
        np.fill_diagonal(K, 1.0)
    return K


@dataclass(frozen=True, eq=False)
class KernelSystem:
    """Kernel matrix at one scale together with the Cholesky factor of
    ``Psi + ridge * I``.

    ``ridge`` is the value actually used, which may exceed the requested one
    when escalation was needed.
    """

    anchors: np.ndarray
    sigma: float
    ridge: float
    Psi: np.ndarray
    factor: tuple

    @property
    def n_anchors(self):
        return self.Psi.shape[0]

    def solve(self, B):
        """``(Psi + ridge I)^{-1} B``."""
        return scipy.linalg.cho_solve(self.factor, np.asarray(B, dtype=float),
                                      check_finite=False)

    def inverse(self):
        return self.solve(np.eye(self.n_anchors))

    def inverse_squared(self):
        """Symmetric ``(Psi + ridge I)^{-2}`` built from the solve."""
        K = self.inverse()
        K = 0.5 * (K + K.T)
        return K @ K


def regularized_system(X, sigma, ridge=1e-8, sq_dist=None):
    """Factor ``Psi + ridge I``, escalating the ridge through
    :data:`RIDGE_LADDER` when the factorization fails or its reciprocal
    condition estimate is below machine epsilon.

    ``sq_dist`` may carry precomputed squared anchor distances.

    Raises
    ------
    KernelConditioningError
        If every ridge on the ladder fails.
    """
    _check_sigma(sigma)
    if not ridge >= 0:
        raise ValueError(f"ridge must be non-negative, got {ridge!r}")
    X = np.asarray(X, dtype=float)
    if sq_dist is None:
        Psi = kernel_matrix(X, sigma)
    else:
        Psi = gaussian(sq_dist, sigma)
        np.fill_diagonal(Psi, 1.0)
    eye = np.eye(Psi.shape[0])
    ladder = [float(ridge)] + [r for r in RIDGE_LADDER if r > ridge]
    for r in ladder:
        M = Psi + r * eye
        try:
            factor = spd_factor(M)
        except NotPositiveDefiniteError:
            continue
        # a factor this close to singular is numerically meaningless
        if spd_rcond(M, factor) < MIN_RCOND:
            continue
        return KernelSystem(X, float(sigma), r, Psi, factor)
    raise KernelConditioningError(
        f"Gaussian kernel matrix at sigma={sigma!r} is numerically singular even "
        f"with ridge {ladder[-1]:g}; anchors are (near-)duplicates or sigma is too large")


def quad_form_inv_sq(ks, Y):
    """``||(Psi + ridge I)^{-1} Y||_F^2``, i.e. ``tr(Y^T Psi^{-2} Y)``."""
    Y = np.asarray(Y, dtype=float)
    if Y.shape[0] != ks.n_anchors:
        raise ValueError(f"Y has {Y.shape[0]} rows, kernel has {ks.n_anchors} anchors")
    C = ks.solve(Y)
    return float(np.sum(C * C))


def kernel_lipschitz(sigma):
    """Lipschitz constant ``sqrt(2) exp(-1/2) / sigma`` of ``r -> exp(-r^2/sigma^2)``."""
    _check_sigma(sigma)
    return float(np.sqrt(2.0) * np.exp(-0.5) / sigma)
