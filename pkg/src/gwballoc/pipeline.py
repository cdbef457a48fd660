"""Shared rebalance step: estimates + views -> weights for every methodology."""

import logging

import numpy as np

from .linalg import _sym
from .mvo import MvoProblem, solve_mvo
from .updates import bl1_update, bl2_update, equilibrium_drift, gwb1_update, gwb2_update
from .views import PriorSpec, Target, ViewSet, confidence_to_lambda

log = logging.getLogger(__name__)

RIDGE_RTOL = 1e-10


def method_labels(confidences):
    """Column order used in every report: BM, BL1, BL2, then GWB1/GWB2 per confidence."""
    labels = ["BM", "BL1", "BL2"]
    labels += [f"GWB1({t:g})" for t in confidences]
    labels += [f"GWB2({t:g})" for t in confidences]
    return labels


def estimate_cov(window):
    """Unbiased sample covariance, clipped to PSD and floored to stay positive definite.

    The floor lifts every eigenvalue to at least ``1e-10 * lambda_max`` so the
    estimate can serve as a prior (which must be invertible) even when an
    asset is flat over the window.
    """
    X = np.asarray(window, dtype=float)
    C = np.atleast_2d(np.cov(X, rowvar=False, ddof=1))
    w, Q = np.linalg.eigh(_sym(C))
    top = max(w[-1], 0.0)
    floor = RIDGE_RTOL * top if top > 0 else 1e-300
    if w[0] >= floor:
        return _sym(C)
    return _sym((Q * np.maximum(w, floor)) @ Q.T)


def allocate_all(cov_hat, views_drift, views_returns, confidences, tau, gamma, rf=0.0):
    """Weights for all methodologies at one rebalance.

    Parameters
    ----------
    cov_hat : (N, N) positive definite return-covariance estimate.
    views_drift, views_returns : ViewSet
        Views used by the drift-space (BL1, GWB1) and return-space (BL2, GWB2)
        methods.
    confidences : sequence of float
    tau, gamma, rf : float

    Returns
    -------
    dict mapping label -> weight vector, in :func:`method_labels` order.
    """
    n = cov_hat.shape[0]
    w_bm = np.full(n, 1.0 / n)
    mu = equilibrium_drift(cov_hat, w_bm, gamma, rf)
    prior = PriorSpec(mu, cov_hat, tau, gamma, rf)

    def mvo(post):
        return solve_mvo(MvoProblem(post.mean, post.cov, gamma, rf)).w

    out = {"BM": w_bm}
    out["BL1"] = mvo(bl1_update(prior, views_drift))
    out["BL2"] = mvo(bl2_update(mu, cov_hat, views_returns))
    for t in confidences:
        out[f"GWB1({t:g})"] = mvo(gwb1_update(prior, views_drift, confidence_to_lambda(t)))
    for t in confidences:
        out[f"GWB2({t:g})"] = mvo(gwb2_update(mu, cov_hat, views_returns, confidence_to_lambda(t)))
    return out


def make_views(P, nu_drift, cov_drift, nu_returns, cov_returns):
    return (
        ViewSet(P, nu_drift, cov_drift, Target.DRIFT),
        ViewSet(P, nu_returns, cov_returns, Target.RETURNS),
    )


def rebalance_dates(start, horizon, period):
    """Indices ``start, start + period, ...`` strictly below ``horizon``."""
    return list(range(start, horizon, period))


def hold_returns(returns, weights_by_date, dates, horizon):
    """Per-period returns of constant-weight portfolios held between rebalances."""
    out = []
    bounds = list(dates) + [horizon]
    for k, t in enumerate(dates):
        out.append(returns[t:bounds[k + 1]] @ weights_by_date[k])
    return np.concatenate(out) if out else np.zeros(0)
