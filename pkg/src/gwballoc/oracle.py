"""Brute-force minimiser of the barycentric Lagrangian, used as a test oracle.

The objective is minimised directly over ``(m, L)`` with ``C = L L^T``, with
no use of the closed-form solution. Gradients are analytic:

    d/dC tr (S C S)^{1/2} = 1/2 S (S C S)^{-1/2} S,    dC -> dL: 2 G L.
"""

import logging
import math

import numpy as np
from scipy import optimize

from .errors import BudgetExhausted, NegativeLambda, ValidationError
from .linalg import _sym, sym_sqrt

log = logging.getLogger(__name__)


def _root_and_inv_root(M):
    w, Q = np.linalg.eigh(_sym(M))
    w = np.clip(w, 1e-300, None)
    r = np.sqrt(w)
    return float(np.sum(r)), _sym((Q / r) @ Q.T)


class _Objective:
    def __init__(self, mu, cov, P, nu, cov_v, lam):
        self.mu, self.P, self.nu, self.lam = mu, P, nu, lam
        self.n = mu.shape[0]
        self.S = sym_sqrt(cov)
        self.R = sym_sqrt(cov_v)
        self.const = np.trace(cov) + lam * np.trace(cov_v)
        self.tril = np.tril_indices(self.n)

    def unpack(self, x):
        m = x[: self.n]
        L = np.zeros((self.n, self.n))
        L[self.tril] = x[self.n:]
        return m, L

    def pack(self, m, L):
        return np.concatenate([m, L[self.tril]])

    def __call__(self, x):
        m, L = self.unpack(x)
        C = L @ L.T
        P, S, R, lam = self.P, self.S, self.R, self.lam
        dm, dv = m - self.mu, P @ m - self.nu
        f = dm @ dm + lam * dv @ dv + np.trace(C) + lam * np.trace(P @ C @ P.T) + self.const
        gm = 2 * dm + 2 * lam * P.T @ dv
        t1, i1 = _root_and_inv_root(S @ C @ S)
        G = np.eye(self.n) + lam * P.T @ P - S @ i1 @ S
        f -= 2 * t1
        if lam > 0:
            RP = R @ P
            t2, i2 = _root_and_inv_root(RP @ C @ RP.T)
            f -= 2 * lam * t2
            G -= lam * RP.T @ i2 @ RP
        gL = 2 * _sym(G) @ L
        return f, np.concatenate([gm, gL[self.tril]])


def gwb_numeric_oracle(mu_p, cov_p, views, lam, budget=20000, n_starts=5, seed=0, gtol=1e-11):
    """Minimise the barycentric Lagrangian numerically.

    Parameters
    ----------
    mu_p, cov_p : prior mean and covariance.
    views : ViewSet
        Uses ``P``, ``nu`` and ``cov_v``.
    lam : float
        Finite, non-negative multiplier.
    budget : int
        BFGS iteration cap per start.
    n_starts : int
        Number of seeded starts; the first start is the prior itself.
    seed : int

    Returns
    -------
    m, C : ndarray
        Best point over all starts.

    Raises
    ------
    BudgetExhausted
        If every start stopped on the iteration cap. ``best`` holds ``(m, C)``.
    """
    if lam < 0:
        raise NegativeLambda(f"lambda must be >= 0, got {lam}")
    if not math.isfinite(lam):
        raise ValidationError("the numeric oracle needs a finite lambda")
    mu_p = np.asarray(mu_p, dtype=float)
    cov_p = np.asarray(cov_p, dtype=float)
    P = np.atleast_2d(np.asarray(views.P, dtype=float))
    obj = _Objective(mu_p, cov_p, P, np.asarray(views.nu, dtype=float),
                     np.asarray(views.cov_v, dtype=float), float(lam))
    rng = np.random.default_rng(seed)
    n = mu_p.shape[0]
    L0 = np.linalg.cholesky(cov_p)
    scale = np.sqrt(np.trace(cov_p) / n)

    best, best_f, capped = None, np.inf, 0
    for k in range(n_starts):
        if k == 0:
            m0, Lk = mu_p.copy(), L0.copy()
        else:
            m0 = mu_p + scale * rng.standard_normal(n)
            Lk = L0 + 0.5 * scale * np.tril(rng.standard_normal((n, n)))
            Lk[np.diag_indices(n)] = np.abs(np.diag(Lk)) + 0.1 * scale
        res = optimize.minimize(obj, obj.pack(m0, Lk), jac=True, method="BFGS",
                                options={"maxiter": budget, "gtol": gtol})
        if res.nit >= budget:
            capped += 1
        log.debug("oracle start %d: f=%.12g nit=%d %s", k, res.fun, res.nit, res.message)
        if res.fun < best_f:
            best_f, best = res.fun, res.x
    m, L = obj.unpack(best)
    out = (m, _sym(L @ L.T))
    if capped == n_starts:
        raise BudgetExhausted(f"all {n_starts} starts hit the {budget}-iteration cap", best=out)
    return out
