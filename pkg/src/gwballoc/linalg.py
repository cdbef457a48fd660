"""Symmetric-matrix kernel.

Square roots, pseudo-inverses and pseudo-determinants are all computed from a
symmetric eigendecomposition so that the PSD branch is exact and degenerate
(rank-deficient) matrices are handled with a single spectral cutoff rule.
"""

import numpy as np

from .errors import DimensionMismatch, NegativeEigenvalueBeyondTolerance, NotSymmetric

SYM_RTOL = 1e-10
PSD_RTOL = 1e-10
SQRT_RTOL = 1e-8


def as_symmetric(M, rtol=SYM_RTOL):
    """Return ``(M + M.T) / 2`` after checking that ``M`` is symmetric.

    Asymmetry up to ``rtol * max|M|`` is treated as round-off; anything larger
    raises :class:`NotSymmetric` rather than being silently averaged away.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NotSymmetric("matrix has non-finite entries")
    scale = np.max(np.abs(M)) if M.size else 0.0
    asym = np.max(np.abs(M - M.T)) if M.size else 0.0
    if asym > rtol * scale:
        raise NotSymmetric(f"max |a_ij - a_ji| = {asym:.3e} exceeds {rtol:g} * {scale:.3e}")
    return 0.5 * (M + M.T)


def as_covariance(M, rtol=PSD_RTOL):
    """Symmetric check plus PSD check ``eig >= -rtol * lambda_max``."""
    M = as_symmetric(M)
    if M.size:
        w = np.linalg.eigvalsh(M)
        scale = max(np.max(np.abs(w)), 0.0)
        if w[0] < -rtol * scale:
            raise NegativeEigenvalueBeyondTolerance(
                f"min eigenvalue {w[0]:.3e} below -{rtol:g} * {scale:.3e}"
            )
    return M


def _sym(M):
    return 0.5 * (M + M.T)


def _eigh(M):
    w, Q = np.linalg.eigh(M)
    return w, Q


def _recompose(w, Q):
    return _sym((Q * w) @ Q.T)


def sym_sqrt(M, check=True):
    """Unique PSD square root of a symmetric PSD matrix.

    Eigenvalues in ``[-1e-8 * lambda_max, 0)`` are clipped to zero before
    rooting; more negative eigenvalues raise
    :class:`NegativeEigenvalueBeyondTolerance`.

    Examples
    --------
    >>> sym_sqrt(np.diag([4.0, 9.0]))
    array([[2., 0.],
           [0., 3.]])
    """
    M = as_symmetric(M) if check else _sym(np.asarray(M, dtype=float))
    w, Q = _eigh(M)
    scale = np.max(np.abs(w)) if w.size else 0.0
    if w.size and w[0] < -SQRT_RTOL * scale:
        raise NegativeEigenvalueBeyondTolerance(
            f"min eigenvalue {w[0]:.3e} below -{SQRT_RTOL:g} * {scale:.3e}"
        )
    return _recompose(np.sqrt(_drop_noise(w)), Q)


def _drop_noise(w):
    """Zero eigenvalues that are indistinguishable from 0 at working precision.

    Rooting round-off (e.g. sqrt(1e-16) = 1e-8) would otherwise leak into
    square roots of singular matrices.
    """
    if not w.size:
        return w
    cut = 4.0 * w.size * np.finfo(float).eps * np.max(np.abs(w))
    return np.where(w > cut, w, 0.0)


def psd_factor(M):
    """Spectral factor ``F`` with ``F F^T = M`` (rounding-level eigenvalues dropped)."""
    w, Q = _eigh(_sym(np.asarray(M, dtype=float)))
    w = _drop_noise(w)
    keep = w > 0
    return Q[:, keep] * np.sqrt(w[keep])


def default_tol(w, n):
    """Rank cutoff ``1e-12 * |lambda|_max * n`` used by the spectral routines."""
    return 1e-12 * (np.max(np.abs(w)) if len(w) else 0.0) * n


def pseudo_inverse(M, tol=None):
    """Spectral Moore-Penrose pseudo-inverse of a symmetric matrix.

    Eigenvalues with ``|lambda| > tol`` are inverted, the rest are zeroed.
    """
    M = as_symmetric(M)
    w, Q = _eigh(M)
    if tol is None:
        tol = default_tol(w, M.shape[0])
    keep = np.abs(w) > tol
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    return _recompose(inv, Q)


def pseudo_det(M, tol=None):
    """Product of the eigenvalues above ``tol``; 1 for an all-zero spectrum."""
    M = as_symmetric(M)
    w = np.linalg.eigvalsh(M)
    if tol is None:
        tol = default_tol(w, M.shape[0])
    return float(np.prod(w[np.abs(w) > tol]))


def clip_to_psd(M):
    """Clip the eigenvalues of a symmetric matrix below at zero.

    Inputs that are already PSD, up to rounding-level negative eigenvalues,
    are returned unchanged (bitwise), which makes the operation idempotent.
    """
    M = as_symmetric(M)
    w, Q = _eigh(M)
    if not w.size or w[0] >= -4.0 * w.size * np.finfo(float).eps * np.max(np.abs(w)):
        return M
    return _recompose(np.clip(w, 0.0, None), Q)


def psd_inv_sqrt(M, tol=None):
    """Pseudo-inverse square root of a PSD matrix (zero on the null space)."""
    M = _sym(np.asarray(M, dtype=float))
    w, Q = _eigh(M)
    if tol is None:
        tol = default_tol(w, M.shape[0])
    out = np.zeros_like(w)
    keep = w > tol
    out[keep] = 1.0 / np.sqrt(w[keep])
    return _recompose(out, Q)


def is_positive_definite(M, rtol=1e-12):
    w = np.linalg.eigvalsh(_sym(np.asarray(M, dtype=float)))
    return bool(w.size and w[0] > rtol * np.max(np.abs(w)))


def numerical_rank(M, tol=None):
    w = np.linalg.eigvalsh(_sym(np.asarray(M, dtype=float)))
    if tol is None:
        tol = default_tol(w, len(w))
    return int(np.sum(np.abs(w) > tol))
