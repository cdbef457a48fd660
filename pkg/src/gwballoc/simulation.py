"""Back-validation on simulated Gaussian return paths.

Views are generated from the *forward* window on purpose, so that their
correctness can be controlled: correct views point at the realised forward
mean, incorrect ones at its negative and ambiguous ones at zero.
"""

import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import GwbError, InsufficientDegreesOfFreedom, OutOfRange, ValidationError
from .linalg import _sym, as_covariance
from .pipeline import allocate_all, estimate_cov, hold_returns, make_views, method_labels, rebalance_dates
from .stats import PERIODS_PER_YEAR, RunReport, sharpe

log = logging.getLogger(__name__)


class ViewsKind(enum.Enum):
    CORRECT = "correct"
    AMBIGUOUS = "ambiguous"
    INCORRECT = "incorrect"


_SIGN = {ViewsKind.CORRECT: 1.0, ViewsKind.AMBIGUOUS: 0.0, ViewsKind.INCORRECT: -1.0}


@dataclass(frozen=True)
class Stage1Config:
    """Settings of a simulated back-validation run.

    The defaults are the full-scale settings (50 assets, 250 paths of 4000
    days). ``drift_sd`` and the volatility range describe how each path's
    true drift and covariance are drawn.
    """

    n_assets: int = 50
    n_views: int = None
    horizon: int = 4000
    n_paths: int = 250
    lookback: int = 125
    forward: int = 750
    tau: float = None
    gamma: float = 2.5
    confidences: tuple = (0.95, 0.05)
    views_kind: str = "correct"
    rebalance_period: int = 63
    master_seed: int = 0
    drift_sd: float = 0.08 / math.sqrt(252)
    vol_low: float = 0.10
    vol_high: float = 0.40
    periods_per_year: int = PERIODS_PER_YEAR

    def __post_init__(self):
        if self.n_views is None:
            object.__setattr__(self, "n_views", self.n_assets)
        if self.tau is None:
            object.__setattr__(self, "tau", 1.0 / self.lookback)
        object.__setattr__(self, "confidences", tuple(float(t) for t in self.confidences))
        for name in ("n_assets", "n_views", "horizon", "n_paths", "lookback", "forward",
                     "rebalance_period", "periods_per_year"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if self.n_views > self.n_assets:
            raise ValidationError(f"n_views ({self.n_views}) cannot exceed n_assets ({self.n_assets})")
        if self.lookback + self.forward > self.horizon:
            raise ValidationError("lookback + forward must not exceed horizon")
        if self.forward < self.n_views:
            raise InsufficientDegreesOfFreedom(f"forward ({self.forward}) must be >= n_views ({self.n_views})")
        if self.lookback <= self.n_assets:
            log.warning("lookback %d <= n_assets %d: covariance estimates will be floored", self.lookback, self.n_assets)
        if not 0.0 < self.tau <= 1.0:
            raise OutOfRange(f"tau must lie in (0, 1], got {self.tau}")
        if not self.gamma > 0:
            raise OutOfRange(f"gamma must be > 0, got {self.gamma}")
        if any(not 0.0 <= t <= 1.0 for t in self.confidences):
            raise OutOfRange(f"confidences must lie in [0, 1], got {self.confidences}")
        ViewsKind(self.views_kind)

    @property
    def kind(self):
        return ViewsKind(self.views_kind)

    @property
    def views_matrix(self):
        return np.eye(self.n_assets)[: self.n_views]

    def to_dict(self):
        d = asdict(self)
        d["confidences"] = list(self.confidences)
        return d

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValidationError(f"unknown config field(s): {', '.join(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ValidationError(str(exc)) from None


@dataclass
class PathResult:
    path: int
    seed: list
    returns: dict = field(default_factory=dict)
    sharpe: dict = field(default_factory=dict)


def sample_mvn(mean, cov, n, rng):
    """``n`` draws of N(mean, cov) as an (n, d) array, via a spectral factor."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = as_covariance(np.atleast_2d(np.asarray(cov, dtype=float)))
    w, Q = np.linalg.eigh(cov)
    F = Q * np.sqrt(np.clip(w, 0.0, None))
    z = rng.standard_normal((n, mean.shape[0]))
    return mean + z @ F.T


def sample_wishart(df, scale, rng):
    """One draw of W(df, scale) by the Bartlett decomposition.

    ``scale`` may be singular; a spectral factor replaces the Cholesky factor.
    """
    scale = as_covariance(np.atleast_2d(np.asarray(scale, dtype=float)))
    p = scale.shape[0]
    if df < p:
        raise InsufficientDegreesOfFreedom(f"df={df} < dimension {p}")
    w, Q = np.linalg.eigh(scale)
    F = Q * np.sqrt(np.clip(w, 0.0, None))
    A = np.zeros((p, p))
    A[np.diag_indices(p)] = np.sqrt(rng.chisquare(df - np.arange(p)))
    il = np.tril_indices(p, -1)
    A[il] = rng.standard_normal(il[0].size)
    FA = F @ A
    return _sym(FA @ FA.T)


def generate_views(kind, P, mu_fwd, cov_fwd, ell_f, rng, tau=1.0):
    """Blurred views built from forward-window estimates.

    Returns ``(nu_returns, cov_returns, nu_drift, cov_drift)``. Both target
    spaces share one Wishart draw ``S`` and one normal vector ``z``:
    ``cov_returns = S / ell_f``, ``cov_drift = tau * cov_returns`` and
    ``nu = sign * P mu_fwd + chol(cov) z`` with sign +1, 0, -1 for correct,
    ambiguous and incorrect views.

    When ``ell_f`` is below the number of views the Wishart draw is skipped
    and ``P cov_fwd P^T`` is used as is.
    """
    kind = ViewsKind(kind)
    P = np.atleast_2d(P)
    scale = _sym(P @ cov_fwd @ P.T)
    n_v = P.shape[0]
    if ell_f >= n_v:
        cov_r = sample_wishart(ell_f, scale, rng) / ell_f
    else:
        log.info("forward window of %d periods < %d views: using unsampled view covariance", ell_f, n_v)
        cov_r = scale
    z = rng.standard_normal(n_v)
    w, Q = np.linalg.eigh(cov_r)
    noise = (Q * np.sqrt(np.clip(w, 0.0, None))) @ (Q.T @ z)
    center = _SIGN[kind] * (P @ mu_fwd)
    nu_r = center + noise
    nu_d = center + math.sqrt(tau) * noise
    return nu_r, cov_r, nu_d, tau * cov_r


def draw_ground_truth(cfg, rng):
    """Per-path true drift and covariance."""
    n = cfg.n_assets
    mu = cfg.drift_sd * rng.standard_normal(n)
    vols = np.exp(rng.uniform(math.log(cfg.vol_low), math.log(cfg.vol_high), n)) / math.sqrt(cfg.periods_per_year)
    S = sample_wishart(n + 2, np.eye(n), rng)
    d = 1.0 / np.sqrt(np.diag(S))
    corr = _sym(S * np.outer(d, d))
    np.fill_diagonal(corr, 1.0)
    return mu, _sym(corr * np.outer(vols, vols))


def path_seed(master_seed, path):
    return [int(master_seed), int(path)]


def run_path(cfg, path):
    """Simulate one path and back-validate every methodology on it."""
    seed = path_seed(cfg.master_seed, path)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    mu, cov = draw_ground_truth(cfg, rng)
    R = sample_mvn(mu, cov, cfg.horizon, rng)
    P = cfg.views_matrix
    labels = method_labels(cfg.confidences)
    dates = rebalance_dates(cfg.lookback, cfg.horizon, cfg.rebalance_period)
    weights = {m: [] for m in labels}
    for t in dates:
        try:
            c_hat = estimate_cov(R[t - cfg.lookback:t])
            fwd = R[t:t + cfg.forward]
            ell = fwd.shape[0]
            mu_f = fwd.mean(axis=0)
            c_f = estimate_cov(fwd) if ell >= 2 else np.zeros_like(c_hat)
            nu_r, cv_r, nu_d, cv_d = generate_views(cfg.kind, P, mu_f, c_f, ell, rng, cfg.tau)
            vd, vr = make_views(P, nu_d, cv_d, nu_r, cv_r)
            ws = allocate_all(c_hat, vd, vr, cfg.confidences, cfg.tau, cfg.gamma)
        except GwbError as exc:
            raise type(exc)(f"path {path}, rebalance period {t}: {exc}") from exc
        for m in labels:
            weights[m].append(ws[m])
    res = PathResult(path, seed)
    for m in labels:
        r = hold_returns(R, weights[m], dates, cfg.horizon)
        res.returns[m] = r
        res.sharpe[m] = sharpe(r, cfg.periods_per_year)
    return res


def _run_path_star(args):
    return run_path(*args)


def run_paths(cfg, threads=1):
    paths = range(cfg.n_paths)
    if threads and threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_run_path_star, [(cfg, p) for p in paths]))
    else:
        results = [run_path(cfg, p) for p in paths]
    return sorted(results, key=lambda r: r.path)


def run_stage1(cfg, threads=1):
    """Run every path and summarise per-path Sharpe ratios in a RunReport."""
    results = run_paths(cfg, threads)
    labels = method_labels(cfg.confidences)
    S = np.array([[r.sharpe[m] for m in labels] for r in results])
    return RunReport.from_sharpe(labels, S, config={"stage": 1, **cfg.to_dict()},
                                 seeds=[r.seed for r in results])
