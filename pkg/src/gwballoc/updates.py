"""Posterior updates: two Black-Litterman variants and the two barycentric ones.

The barycentric (GWB) covariance update is evaluated in the congruence form

    B = lam * C^{-1/2} (C^{1/2} W Q W C^{1/2})^{1/2} C^{-1/2},   Q = P^T C_V P,

which equals ``lam W A^{-1/2} (A^{1/2} Q A^{1/2})^{1/2} A^{-1/2} W`` with
``A = W C W`` because the matrix geometric mean commutes with congruences.
It never forms ``A^{-1/2}``, so it stays accurate when ``W`` is nearly singular
(large ``lam``) and has a closed limit as ``lam -> inf``.
"""

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import (
    DimensionMismatch,
    NegativeLambda,
    NonPsdPrior,
    NotApplicable,
    SingularViewCovariance,
    TargetMismatch,
    ValidationError,
)
from .linalg import _sym, as_covariance, clip_to_psd, is_positive_definite, psd_inv_sqrt, sym_sqrt
from .views import Target, confidence_to_lambda, validate

log = logging.getLogger(__name__)


class Method(enum.Enum):
    BL1 = "bl1"
    BL2 = "bl2"
    GWB1 = "gwb1"
    GWB2 = "gwb2"


@dataclass(frozen=True)
class PosteriorUpdate:
    """Updated return distribution produced by one of the four methods."""

    mean: np.ndarray
    cov: np.ndarray
    method: Method
    lambda_used: float = math.nan

    def to_dict(self):
        lam = self.lambda_used
        if math.isinf(lam):
            lam = "inf"
        elif math.isnan(lam):
            lam = None
        return {
            "mean": np.asarray(self.mean).tolist(),
            "cov": np.asarray(self.cov).tolist(),
            "method": self.method.value,
            "lambda": lam,
        }

    @classmethod
    def from_dict(cls, d):
        missing = [k for k in ("mean", "cov") if k not in d]
        if missing:
            raise ValidationError(f"posterior JSON is missing field(s): {', '.join(missing)}")
        lam = d.get("lambda")
        lam = math.inf if lam == "inf" else (math.nan if lam is None else float(lam))
        try:
            method = Method(d.get("method", "gwb2"))
        except ValueError:
            raise ValidationError(f"unknown method {d.get('method')!r}") from None
        cov = as_covariance(np.atleast_2d(np.asarray(d["cov"], dtype=float)))
        mean = np.atleast_1d(np.asarray(d["mean"], dtype=float))
        if cov.shape[0] != mean.shape[0]:
            raise DimensionMismatch(f"mean has length {mean.shape[0]}, cov is {cov.shape}")
        return cls(mean, cov, method, lam)


def equilibrium_drift(cov, w_bm, gamma, rf=0.0):
    """Implied drift ``rf e + gamma C w_bm`` that makes ``w_bm`` MVO-optimal."""
    cov = np.asarray(cov, dtype=float)
    w_bm = np.asarray(w_bm, dtype=float)
    if cov.shape != (w_bm.shape[0], w_bm.shape[0]):
        raise DimensionMismatch(f"cov {cov.shape} does not match weights of length {w_bm.shape[0]}")
    return rf + gamma * (cov @ w_bm)


def _check_views(views, n_assets, target):
    v = validate(views, n_assets)
    if v.target is not target:
        raise TargetMismatch(f"expected {target.value}-space views, got {v.target.value}")
    return v


def _chol(M, err, what):
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise err(f"{what} is not positive definite") from None


def _bl_posterior(mu0, cov0, P, nu, cov_v):
    """Bayesian update of N(mu0, cov0) with views ``P x ~ N(nu, cov_v)``.

    Returns the posterior mean and ``(cov0^{-1} + P^T cov_v^{-1} P)^{-1}``,
    using triangular solves only.
    """
    n = mu0.shape[0]
    L = _chol(cov0, NonPsdPrior, "prior covariance")
    R = _chol(cov_v, SingularViewCovariance, "view covariance")
    G = sla.solve_triangular(R, P @ L, lower=True)
    H = np.eye(n) + G.T @ G
    M = np.linalg.cholesky(H)
    X = sla.solve_triangular(M, L.T, lower=True)
    cov_post = _sym(X.T @ X)
    resid = nu - P @ mu0
    mean = mu0 + cov_post @ (P.T @ sla.cho_solve((R, True), resid))
    return mean, cov_post


def bl1_update(prior, views):
    """Views on the drift. Prior drift covariance is ``tau * cov``.

    The returned covariance is the return covariance ``cov + C_BL``, where
    ``C_BL`` is the posterior covariance of the drift.
    """
    v = _check_views(views, prior.n_assets, Target.DRIFT)
    mean, c_bl = _bl_posterior(prior.mu, prior.tau * prior.cov, v.P, v.nu, v.cov_v)
    return PosteriorUpdate(mean, _sym(prior.cov + c_bl), Method.BL1)


def bl2_update(mu_hat, cov_hat, views):
    """Views on returns; the posterior is the conditional return law (no tau)."""
    mu_hat = np.atleast_1d(np.asarray(mu_hat, dtype=float))
    cov_hat = as_covariance(np.atleast_2d(np.asarray(cov_hat, dtype=float)))
    v = _check_views(views, mu_hat.shape[0], Target.RETURNS)
    mean, cov = _bl_posterior(mu_hat, cov_hat, v.P, v.nu, v.cov_v)
    return PosteriorUpdate(mean, cov, Method.BL2)


def _view_factors(P, lam):
    """Spectral pieces of ``W = (I + lam P^T P)^{-1}`` and ``K = lam P W``.

    With ``P = U diag(s) V^T``:  ``W = I - V diag(s^2 / (1/lam + s^2)) V^T``
    and ``K = U diag(s / (1/lam + s^2)) V^T``; both have finite limits as
    ``lam -> inf`` on the row space of P.
    """
    U, s, Vt = np.linalg.svd(P, full_matrices=False)
    inv_lam = 0.0 if math.isinf(lam) else 1.0 / lam
    if math.isinf(lam):
        keep = s > max(P.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    else:
        keep = np.ones_like(s, dtype=bool)
    s = np.where(keep, s, 0.0)
    denom = np.where(keep, inv_lam + s * s, 1.0)
    fw = np.where(keep, s * s / denom, 0.0)
    fk = np.where(keep, s / denom, 0.0)
    n = P.shape[1]
    W = _sym(np.eye(n) - (Vt.T * fw) @ Vt)
    K = (U * fk) @ Vt
    return W, K


def _check_lambda(lam):
    lam = float(lam)
    if math.isnan(lam) or lam < 0:
        raise NegativeLambda(f"lambda must be >= 0, got {lam}")
    return lam


def _check_prior_cov(cov):
    try:
        cov = as_covariance(np.atleast_2d(np.asarray(cov, dtype=float)))
    except ValidationError as exc:
        raise NonPsdPrior(f"prior covariance: {exc}") from None
    if not is_positive_definite(cov):
        raise NonPsdPrior("prior covariance must be positive definite")
    return cov


def gwb_core_update(mu_p, cov_p, views, lam):
    """Minimiser ``(m*, C*)`` of the barycentric Lagrangian.

    Parameters
    ----------
    mu_p, cov_p : prior mean and positive definite covariance.
    views : ViewSet
        Only ``P``, ``nu`` and ``cov_v`` are used; ``cov_v`` may be singular.
    lam : float
        Non-negative multiplier; ``math.inf`` gives the exact limit in which
        ``P m* = nu`` and ``P C* P^T = cov_v`` (for full-row-rank ``P``).

    Returns
    -------
    m_star, c_star : ndarray
    """
    lam = _check_lambda(lam)
    mu_p = np.atleast_1d(np.asarray(mu_p, dtype=float))
    cov_p = _check_prior_cov(cov_p)
    v = validate(views, mu_p.shape[0])
    if cov_p.shape[0] != mu_p.shape[0]:
        raise DimensionMismatch(f"prior mean has length {mu_p.shape[0]}, covariance is {cov_p.shape}")
    if lam == 0.0:
        return mu_p.copy(), cov_p.copy()

    W, K = _view_factors(v.P, lam)
    m_star = W @ mu_p + K.T @ v.nu

    evals, Q = np.linalg.eigh(cov_p)
    root = _sym((Q * np.sqrt(evals)) @ Q.T)
    iroot = _sym((Q / np.sqrt(evals)) @ Q.T)
    T = _sym(K.T @ v.cov_v @ K)
    B = _sym(iroot @ sym_sqrt(_sym(root @ T @ root), check=False) @ iroot)
    F = W + B
    c_star = clip_to_psd(_sym(F @ cov_p @ F))
    return m_star, c_star


def _resolve_lambda(views, lam):
    return confidence_to_lambda(views.confidence) if lam is None else _check_lambda(lam)


def gwb1_update(prior, views, lam=None):
    """Barycentric update of drift-space views.

    The core update acts on N(mu, tau*cov); the returned return covariance is
    ``cov + C_core``. ``lam=None`` takes the multiplier from the view confidence.
    """
    v = _check_views(views, prior.n_assets, Target.DRIFT)
    lam = _resolve_lambda(v, lam)
    m, c_core = gwb_core_update(prior.mu, prior.tau * prior.cov, v, lam)
    return PosteriorUpdate(m, _sym(prior.cov + c_core), Method.GWB1, lam)


def gwb2_update(mu_hat, cov_hat, views, lam=None):
    """Barycentric update of return-space views; the barycenter is the posterior."""
    mu_hat = np.atleast_1d(np.asarray(mu_hat, dtype=float))
    v = _check_views(views, mu_hat.shape[0], Target.RETURNS)
    lam = _resolve_lambda(v, lam)
    m, c = gwb_core_update(mu_hat, cov_hat, v, lam)
    return PosteriorUpdate(m, c, Method.GWB2, lam)


def _rel(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), np.finfo(float).tiny))


def _real_sqrtm(M):
    R = sla.sqrtm(M)
    return np.real(R)


def gwb_cross_checks(mu_p, cov_p, views, lam):
    """Evaluate the barycentric covariance by independent closed forms.

    Forms compared against the production update:

    ``theorem``   W, A = W C W and A^{-1/2} exactly as stated with explicit inverses;
    ``gamma``     (lam W + Gamma) Q (lam W + Gamma), Gamma built from C^{1/2};
    ``expanded``  A + lam^2 W Q W + lam (A Q)^{1/2} W + lam W (Q A)^{1/2};
    ``inverse``   inverse of the closed form for ``C*^{-1}`` that avoids inverting C.

    Returns a dict with each form, ``max_rel_dev`` (largest relative Frobenius
    deviation from the production value) and ``inverse_identity`` (the
    deviation of ``C*^{-1} C*`` from the identity).

    Raises
    ------
    NotApplicable
        When ``Q = P^T C_V P`` is singular or ``lam`` is infinite.
    """
    lam = _check_lambda(lam)
    if math.isinf(lam):
        raise NotApplicable("closed-form cross-checks need a finite lambda")
    mu_p = np.atleast_1d(np.asarray(mu_p, dtype=float))
    cov_p = _check_prior_cov(cov_p)
    v = validate(views, mu_p.shape[0])
    if v.degenerate:
        raise NotApplicable("P^T C_V P is singular")
    n = mu_p.shape[0]
    C, P = cov_p, v.P
    Qm = _sym(P.T @ v.cov_v @ P)
    _, c_prod = gwb_core_update(mu_p, cov_p, v, lam)

    W = _sym(np.linalg.inv(np.eye(n) + lam * P.T @ P))
    A = _sym(W @ C @ W)
    A_h = sym_sqrt(A)
    A_ih = _sym(np.linalg.inv(A_h))
    B = lam * W @ A_ih @ sym_sqrt(_sym(A_h @ Qm @ A_h)) @ A_ih @ W
    B = _sym(B)
    c_theorem = _sym((W + B) @ C @ (W + B))

    C_h = sym_sqrt(C)
    Gamma = _sym(W @ C_h @ psd_inv_sqrt(_sym(C_h @ W @ Qm @ W @ C_h)) @ C_h @ W)
    F = lam * W + Gamma
    c_gamma = _sym(F @ Qm @ F)

    c_expanded = A + lam**2 * W @ Qm @ W + lam * _real_sqrtm(A @ Qm) @ W + lam * W @ _real_sqrtm(Qm @ A)
    c_expanded = _sym(c_expanded)

    W_inv = np.eye(n) + lam * P.T @ P
    Z = _sym(A_h @ W_inv @ A_h + lam * sym_sqrt(_sym(A_h @ Qm @ A_h)))
    Z_inv = np.linalg.inv(Z)
    c_inv = _sym(W_inv @ A_h @ Z_inv @ Z_inv @ A_h @ W_inv)
    c_from_inverse = _sym(np.linalg.inv(c_inv))

    forms = {
        "production": c_prod,
        "theorem": c_theorem,
        "gamma": c_gamma,
        "expanded": c_expanded,
        "inverse": c_from_inverse,
    }
    names = list(forms)
    dev = max(_rel(forms[a], forms[b]) for i, a in enumerate(names) for b in names[i + 1:])
    ident = float(np.max(np.abs(c_inv @ c_prod - np.eye(n))))
    return {"forms": forms, "inverse_matrix": c_inv, "max_rel_dev": dev, "inverse_identity": ident}
