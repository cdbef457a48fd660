"""Gaussian measures, linear push-forwards and the Bures-Wasserstein distance."""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NegativeLambda, ValidationError
from .linalg import _sym, as_covariance, clip_to_psd, psd_factor


@dataclass(frozen=True)
class GaussianMeasure:
    """Normal law N(mean, cov); cov may be singular.

    Parameters
    ----------
    mean : array_like, shape (n,)
    cov : array_like, shape (n, n)
        Symmetric PSD up to the tolerances of :func:`gwballoc.linalg.as_covariance`.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if mean.ndim != 1:
            raise DimensionMismatch(f"mean must be a vector, got shape {mean.shape}")
        if not np.all(np.isfinite(mean)):
            raise ValidationError("mean has non-finite entries")
        cov = as_covariance(cov)
        if cov.shape[0] != mean.shape[0]:
            raise DimensionMismatch(f"mean has length {mean.shape[0]} but cov is {cov.shape}")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self):
        return self.mean.shape[0]

    def to_dict(self):
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist()}

    @classmethod
    def from_dict(cls, d):
        try:
            mean, cov = d["mean"], d["cov"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"Gaussian JSON needs 'mean' and 'cov': missing {exc}") from None
        cov = np.asarray(cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise DimensionMismatch(f"'cov' must be square, got shape {cov.shape}")
        return cls(mean, cov)


def pushforward(g, P):
    """Image of ``g`` under ``x -> P x``: N(P m, P C P^T).

    Examples
    --------
    >>> g = GaussianMeasure([1.0, 2.0], np.eye(2))
    >>> h = pushforward(g, [[1.0, 1.0]])
    >>> float(h.mean[0]), float(h.cov[0, 0])
    (3.0, 2.0)
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape[1] != g.dim:
        raise DimensionMismatch(f"P has {P.shape[1]} columns, measure has dimension {g.dim}")
    return GaussianMeasure(P @ g.mean, clip_to_psd(_sym(P @ g.cov @ P.T)))


def bures_trace(C1, C2):
    """``tr (C1^1/2 C2 C1^1/2)^1/2``.

    Evaluated as the nuclear norm of ``F1^T F2`` for spectral factors
    ``F_i F_i^T = C_i``: its singular values are the square roots of the
    eigenvalues of ``C1^1/2 C2 C1^1/2``, so no inner square root of
    round-off is taken and the value is symmetric in its arguments.
    """
    F1, F2 = psd_factor(C1), psd_factor(C2)
    if F1.shape[1] == 0 or F2.shape[1] == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(F1.T @ F2, compute_uv=False)))


def bures_sq(C1, C2):
    """Covariance part of the squared 2-Wasserstein distance, clipped at 0."""
    val = np.trace(C1) + np.trace(C2) - 2.0 * bures_trace(C1, C2)
    return max(float(val), 0.0)


def wasserstein2_sq(g1, g2):
    """Squared 2-Wasserstein distance between two Gaussian measures.

    Valid for singular covariances, including point masses.
    """
    if g1.dim != g2.dim:
        raise DimensionMismatch(f"dimensions differ: {g1.dim} vs {g2.dim}")
    dm = g1.mean - g2.mean
    return float(dm @ dm) + bures_sq(g1.cov, g2.cov)


def gwb_lagrangian(f_u, f_p, f_v, P, lam):
    """Objective ``W2^2(f_u, f_p) + lam * W2^2(P# f_u, f_v)``.

    ``lam = 0`` skips the views term entirely, so ``f_v`` and ``P`` are not
    inspected beyond their types.
    """
    if lam < 0:
        raise NegativeLambda(f"lambda must be >= 0, got {lam}")
    if f_u.dim != f_p.dim:
        raise DimensionMismatch(f"f_U has dimension {f_u.dim}, f_P has {f_p.dim}")
    base = wasserstein2_sq(f_u, f_p)
    if lam == 0:
        return base
    pushed = pushforward(f_u, P)
    if pushed.dim != f_v.dim:
        raise DimensionMismatch(f"P maps to dimension {pushed.dim}, f_V has {f_v.dim}")
    return base + lam * wasserstein2_sq(pushed, f_v)
