"""Long-only, fully invested mean-variance optimisation on the simplex.

maximise (m - rf)^T x - gamma/2 x^T C x   s.t.  x >= 0, e^T x = 1.

Solved by accelerated projected gradient from e/N followed by an exact
equality-constrained solve on the detected support, and certified by KKT
residuals.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonConvergence, OutOfRange, ValidationError
from .linalg import as_covariance

log = logging.getLogger(__name__)

STATIONARITY_TOL = 1e-7
SLACKNESS_TOL = 1e-8


@dataclass(frozen=True)
class MvoProblem:
    drift: np.ndarray
    cov: np.ndarray
    gamma: float = 2.5
    rf: float = 0.0

    def __post_init__(self):
        drift = np.atleast_1d(np.asarray(self.drift, dtype=float))
        cov = as_covariance(np.atleast_2d(np.asarray(self.cov, dtype=float)))
        if cov.shape[0] != drift.shape[0]:
            raise DimensionMismatch(f"drift has length {drift.shape[0]}, cov is {cov.shape}")
        if not self.gamma > 0:
            raise OutOfRange(f"gamma must be > 0, got {self.gamma}")
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "cov", cov)

    def objective(self, x):
        x = np.asarray(x, dtype=float)
        return (self.drift - self.rf) @ x - 0.5 * self.gamma * x @ self.cov @ x

    def gradient(self, x):
        """Gradient of the *loss* (negated objective)."""
        return self.gamma * (self.cov @ x) - (self.drift - self.rf)


@dataclass(frozen=True)
class Weights:
    """Portfolio weights on the simplex."""

    w: np.ndarray
    stationarity: float = 0.0
    slackness: float = 0.0

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.w, dtype=float))
        if abs(w.sum() - 1.0) > 1e-8 or np.any(w < -1e-10):
            raise ValidationError(f"weights are not on the simplex (sum={w.sum():.12g}, min={w.min():.3g})")
        object.__setattr__(self, "w", w)

    def to_dict(self):
        return {"weights": self.w.tolist()}


def project_simplex(v):
    """Euclidean projection onto ``{x >= 0, sum x = 1}`` (sort-based, exact)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.shape[0] + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def kkt_residuals(prob, x):
    """Return ``(stationarity, complementary slackness)`` for a feasible ``x``.

    Stationarity is the projected-gradient step length ``|x - proj(x - g)|_inf``;
    slackness is ``max |x_i (g_i - nu)|`` with the budget multiplier ``nu = x^T g``.
    """
    g = prob.gradient(x)
    stat = float(np.max(np.abs(x - project_simplex(x - g))))
    nu = float(x @ g)
    slack = float(np.max(np.abs(x * (g - nu))))
    return stat, slack


def _equality_step(prob, S, x):
    """Target of the equality-constrained QP restricted to support ``S``.

    Returns ``(target, bounded)``. When the restricted problem is unbounded
    (flat direction of C with non-zero drift), ``target`` is ``x`` plus a
    descent direction and ``bounded`` is False.
    """
    k = S.size
    a = prob.drift[S] - prob.rf
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = prob.gamma * prob.cov[np.ix_(S, S)]
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    rhs = np.concatenate([a, [1.0]])
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    scale = max(np.max(np.abs(K)), np.max(np.abs(rhs)))
    if np.max(np.abs(K @ sol - rhs)) <= 1e-9 * scale:
        return sol[:k], True
    # unbounded: move along the part of the drift lying in null(C_S) with e^T d = 0
    M = np.vstack([K[:k, :k], np.ones((1, k))])
    _, sv, Vt = np.linalg.svd(M)
    null = Vt[np.sum(sv > 1e-10 * max(sv[0], 1.0)):]
    d = null.T @ (null @ a)
    return x[S] + d, False


def _polish(prob, x, max_steps=None):
    """Primal active-set refinement started from the feasible point ``x``.

    Each step solves the KKT system on the current support, steps back to
    the boundary when that solution leaves the simplex, and adds the most
    violating index when the multipliers ask for it.
    """
    n = x.shape[0]
    x = x.copy()
    support = x > 0
    for _ in range(max_steps or 10 * n + 10):
        S = np.flatnonzero(support)
        target, bounded = _equality_step(prob, S, x)
        d = target - x[S]
        neg = d < 0
        ratios = np.where(neg, x[S] / np.where(neg, -d, 1.0), np.inf)
        alpha = 1.0 if bounded else np.inf
        j = int(np.argmin(ratios))
        if ratios[j] < alpha:
            alpha = ratios[j]
            x[S] = x[S] + alpha * d
            x[S[j]] = 0.0
            x = np.maximum(x, 0.0)
            x /= x.sum()
            support = x > 0
            continue
        if not np.isfinite(alpha):
            break
        x[S] = target
        x /= x.sum()
        g = prob.gradient(x)
        gap = np.where(support, np.inf, g - x @ g)
        j = int(np.argmin(gap))
        if gap[j] >= -1e-15 * max(np.max(np.abs(g)), 1e-300):
            break
        support[j] = True
    return x


def solve_mvo(prob, max_iter=None, tol=1e-14):
    """Solve the long-only MVO problem.

    Parameters
    ----------
    prob : MvoProblem
    max_iter : int, optional
        Projected-gradient iteration cap; default ``50 * N**2`` (at least 2000).

    Returns
    -------
    Weights

    Raises
    ------
    NonConvergence
        KKT residuals above tolerance after the iteration cap and polish.
    """
    n = prob.drift.shape[0]
    if max_iter is None:
        max_iter = max(50 * n * n, 2000)
    lip = prob.gamma * max(np.linalg.eigvalsh(prob.cov)[-1], 0.0)
    step = 1.0 / lip if lip > 0 else 1.0
    x = np.full(n, 1.0 / n)
    y, t = x.copy(), 1.0
    for it in range(1, max_iter + 1):
        x_new = project_simplex(y - step * prob.gradient(y))
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        if prob.objective(x_new) < prob.objective(x):
            # adaptive restart: drop momentum once the objective goes down
            y, t_new = x_new.copy(), 1.0
        else:
            y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        delta = np.max(np.abs(x_new - x))
        x, t = x_new, t_new
        if delta <= tol or it % 50 == 0 or it == max_iter:
            cand = _polish(prob, x)
            stat, slack = kkt_residuals(prob, cand)
            if (stat <= 0.01 * STATIONARITY_TOL and slack <= 0.01 * SLACKNESS_TOL) or delta <= tol:
                x = cand
                break
    x = np.maximum(x, 0.0)
    x /= x.sum()
    stat, slack = kkt_residuals(prob, x)
    if stat > STATIONARITY_TOL or slack > SLACKNESS_TOL:
        raise NonConvergence(
            f"MVO KKT residuals too large: stationarity={stat:.3e}, slackness={slack:.3e}",
            residual=(stat, slack),
            x=x,
        )
    return Weights(x, stat, slack)


def min_vol_weights(cov, gamma=2.5):
    """Long-only minimum-variance weights (MVO with zero drift)."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    return solve_mvo(MvoProblem(np.zeros(cov.shape[0]), cov, gamma))
