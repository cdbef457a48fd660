"""Investor views, prior specification and the confidence parameter."""

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyViewRow,
    NegativeEigenvalueBeyondTolerance,
    NonPsdPrior,
    NonPsdViewCovariance,
    NotSymmetric,
    OutOfRange,
    SingularViewCovariance,
    ValidationError,
)
from .linalg import as_covariance, is_positive_definite, numerical_rank


class Target(enum.Enum):
    """Whether views speak about the drift (expected return) or the returns."""

    DRIFT = "drift"
    RETURNS = "returns"


@dataclass(frozen=True)
class ViewSet:
    """Linear Gaussian views ``P x ~ N(nu, cov_v)``.

    ``degenerate`` is filled in by :func:`validate` and tells whether
    ``P^T cov_v P`` has rank below the number of assets.
    """

    P: np.ndarray
    nu: np.ndarray
    cov_v: np.ndarray
    target: Target = Target.RETURNS
    confidence: float = 0.5
    degenerate: bool = field(default=None, compare=False)

    @property
    def n_views(self):
        return np.atleast_2d(self.P).shape[0]

    def to_dict(self):
        return {
            "target": self.target.value,
            "confidence": float(self.confidence),
            "P": np.asarray(self.P, dtype=float).tolist(),
            "nu": np.asarray(self.nu, dtype=float).tolist(),
            "covV": np.asarray(self.cov_v, dtype=float).tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        try:
            target = Target(d.get("target", "returns"))
        except ValueError:
            raise ValidationError(f"'target' must be 'drift' or 'returns', got {d.get('target')!r}") from None
        missing = [k for k in ("P", "nu", "covV") if k not in d]
        if missing:
            raise ValidationError(f"view JSON is missing field(s): {', '.join(missing)}")
        return cls(
            P=np.atleast_2d(np.asarray(d["P"], dtype=float)),
            nu=np.atleast_1d(np.asarray(d["nu"], dtype=float)),
            cov_v=np.atleast_2d(np.asarray(d["covV"], dtype=float)),
            target=target,
            confidence=float(d.get("confidence", 0.5)),
        )


@dataclass(frozen=True)
class PriorSpec:
    """Prior on the asset-return model.

    ``cov`` plays the role of the return covariance estimate; drift-space
    methods use ``tau * cov`` as the covariance of the drift estimate.
    """

    mu: np.ndarray
    cov: np.ndarray
    tau: float = 1.0
    gamma: float = 2.5
    rf: float = 0.0

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        try:
            cov = as_covariance(np.atleast_2d(np.asarray(self.cov, dtype=float)))
        except (NotSymmetric, NegativeEigenvalueBeyondTolerance) as exc:
            raise NonPsdPrior(f"prior covariance: {exc}") from None
        if cov.shape[0] != mu.shape[0]:
            raise DimensionMismatch(f"prior mean has length {mu.shape[0]}, covariance is {cov.shape}")
        if not is_positive_definite(cov):
            raise NonPsdPrior("prior covariance must be positive definite")
        if not 0.0 < self.tau <= 1.0:
            raise OutOfRange(f"tau must lie in (0, 1], got {self.tau}")
        if not self.gamma > 0:
            raise OutOfRange(f"gamma must be > 0, got {self.gamma}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "cov", cov)

    @property
    def n_assets(self):
        return self.mu.shape[0]

    def to_dict(self):
        return {
            "mean": self.mu.tolist(),
            "cov": self.cov.tolist(),
            "tau": float(self.tau),
            "gamma": float(self.gamma),
            "rf": float(self.rf),
        }

    @classmethod
    def from_dict(cls, d, **overrides):
        missing = [k for k in ("mean", "cov") if k not in d]
        if missing:
            raise ValidationError(f"prior JSON is missing field(s): {', '.join(missing)}")
        kw = {k: d[k] for k in ("tau", "gamma", "rf") if k in d}
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(mu=d["mean"], cov=d["cov"], **kw)


def confidence_to_lambda(t):
    """Map confidence ``t`` in [0, 1] to the multiplier ``t / (1 - t)``.

    ``t = 1`` returns ``inf``, which the updates treat as the exact limit.
    """
    t = float(t)
    if not 0.0 <= t <= 1.0 or math.isnan(t):
        raise OutOfRange(f"confidence must lie in [0, 1], got {t}")
    if t == 1.0:
        return math.inf
    return t / (1.0 - t)


def lambda_to_confidence(lam):
    if math.isinf(lam):
        return 1.0
    return lam / (1.0 + lam)


def validate(v, n_assets):
    """Check a :class:`ViewSet` against ``n_assets`` and set its degeneracy flag.

    Returns a new, validated ViewSet with arrays coerced to float.
    """
    P = np.atleast_2d(np.asarray(v.P, dtype=float))
    nu = np.atleast_1d(np.asarray(v.nu, dtype=float))
    cov_v = np.atleast_2d(np.asarray(v.cov_v, dtype=float))
    if P.ndim != 2 or P.shape[1] != n_assets:
        raise DimensionMismatch(f"P must have {n_assets} columns, got shape {P.shape}")
    n_v = P.shape[0]
    if n_v < 1:
        raise DimensionMismatch("at least one view is required")
    if nu.shape != (n_v,):
        raise DimensionMismatch(f"nu must have length {n_v}, got shape {nu.shape}")
    if cov_v.shape != (n_v, n_v):
        raise DimensionMismatch(f"covV must be {n_v}x{n_v}, got shape {cov_v.shape}")
    empty = np.flatnonzero(~np.any(P != 0.0, axis=1))
    if empty.size:
        raise EmptyViewRow(f"row {int(empty[0])} of P is all zeros")
    if not np.all(np.isfinite(P)) or not np.all(np.isfinite(nu)):
        raise ValidationError("P and nu must be finite")
    try:
        cov_v = as_covariance(cov_v)
    except (NotSymmetric, NegativeEigenvalueBeyondTolerance) as exc:
        raise NonPsdViewCovariance(f"covV: {exc}") from None
    if not 0.0 <= v.confidence <= 1.0:
        raise OutOfRange(f"confidence must lie in [0, 1], got {v.confidence}")
    if v.target is Target.DRIFT and not is_positive_definite(cov_v):
        raise SingularViewCovariance("drift-space views need an invertible covV")
    degenerate = numerical_rank(P.T @ cov_v @ P) < n_assets
    return replace(v, P=P, nu=nu, cov_v=cov_v, degenerate=bool(degenerate))
