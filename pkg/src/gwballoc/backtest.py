"""Walk-forward backtests on a CSV universe with minimum-volatility views.

Every estimate at a rebalance is computed from the trailing window only: the
view generator is handed ``returns[t - lookback:t]`` and nothing else.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from .errors import GwbError, OutOfRange, ParseError, TooFewAssets, ValidationError
from .mvo import min_vol_weights
from .pipeline import allocate_all, estimate_cov, hold_returns, make_views, method_labels, rebalance_dates
from .stats import PERIODS_PER_YEAR, RunReport, sharpe

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReturnsPanel:
    """Simple returns, one row per date and one column per ticker."""

    dates: tuple
    tickers: tuple
    returns: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.returns, dtype=float)
        if R.shape != (len(self.dates), len(self.tickers)):
            raise ValidationError(f"returns shape {R.shape} does not match {len(self.dates)} dates x {len(self.tickers)} tickers")
        if not np.all(np.isfinite(R)):
            raise ValidationError("returns contain missing or non-finite values")
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        R.setflags(write=False)
        object.__setattr__(self, "returns", R)

    @property
    def n_assets(self):
        return len(self.tickers)

    def select(self, columns):
        cols = list(columns)
        return ReturnsPanel(self.dates, [self.tickers[i] for i in cols], self.returns[:, cols])


@dataclass
class LoadReport:
    dropped_tickers: list = field(default_factory=list)
    dropped_rows: int = 0


def load_returns_csv(path, kind="prices", min_history=2, return_report=False):
    """Read a ``date,ticker1,ticker2,...`` CSV into a :class:`ReturnsPanel`.

    Parameters
    ----------
    path : str or Path
    kind : {"prices", "returns"}
        Prices are converted to simple returns ``p_t / p_{t-1} - 1``.
    min_history : int
        Tickers with fewer valid observations (after conversion) are dropped.
    return_report : bool
        Also return a :class:`LoadReport` listing what was dropped.

    Raises
    ------
    ParseError
        Unreadable file, bad header, non-numeric cell (row/column reported),
        unparsable or non-increasing dates.
    TooFewAssets
        Nothing usable is left.
    """
    if kind not in ("prices", "returns"):
        raise ValidationError(f"kind must be 'prices' or 'returns', got {kind!r}")
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError:
        raise ParseError(f"file not found: {path}") from None
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from None
    if raw.shape[1] < 2 or raw.columns[0].strip().lower() != "date":
        raise ParseError(f"{path}: header must be 'date,ticker1,...'", row=1)
    tickers = [c.strip() for c in raw.columns[1:]]
    if len(set(tickers)) != len(tickers):
        raise ParseError(f"{path}: duplicate ticker names in header", row=1)

    values = np.full((raw.shape[0], len(tickers)), np.nan)
    for j, col in enumerate(raw.columns[1:]):
        cells = raw[col].str.strip()
        num = pd.to_numeric(cells.where(cells != "", None), errors="coerce")
        bad = num.isna() & (cells != "") & ~cells.str.lower().isin(["na", "nan", "null"])
        if bad.any():
            i = int(np.flatnonzero(bad.to_numpy())[0])
            # +2: one header line, one-based rows
            raise ParseError(f"{path}: row {i + 2}, column '{tickers[j]}': cannot parse {cells.iloc[i]!r}",
                             row=i + 2, column=tickers[j])
        values[:, j] = num.to_numpy(dtype=float)

    dates = pd.to_datetime(raw.iloc[:, 0].str.strip(), errors="coerce")
    if dates.isna().any():
        i = int(np.flatnonzero(dates.isna().to_numpy())[0])
        raise ParseError(f"{path}: row {i + 2}, column 'date': cannot parse {raw.iloc[i, 0]!r}",
                         row=i + 2, column="date")
    d = dates.to_numpy()
    if np.any(d[1:] <= d[:-1]):
        i = int(np.flatnonzero(d[1:] <= d[:-1])[0]) + 1
        raise ParseError(f"{path}: row {i + 2}: dates must be strictly increasing", row=i + 2, column="date")

    if kind == "prices":
        if np.any(values <= 0):
            i, j = np.argwhere(values <= 0)[0]
            raise ParseError(f"{path}: row {i + 2}, column '{tickers[j]}': prices must be positive",
                             row=int(i) + 2, column=tickers[j])
        values = values[1:] / values[:-1] - 1.0
        d = d[1:]

    report = LoadReport()
    counts = np.sum(np.isfinite(values), axis=0)
    keep = counts >= min_history
    report.dropped_tickers = [t for t, k in zip(tickers, keep) if not k]
    values = values[:, keep]
    tickers = [t for t, k in zip(tickers, keep) if k]
    if not tickers:
        raise TooFewAssets(f"{path}: no ticker has at least {min_history} observations")
    complete = np.all(np.isfinite(values), axis=1)
    report.dropped_rows = int(np.sum(~complete))
    if report.dropped_tickers or report.dropped_rows:
        log.info("dropped tickers %s and %d incomplete rows", report.dropped_tickers, report.dropped_rows)
    dates_out = [pd.Timestamp(x).strftime("%Y-%m-%d") for x in d[complete]]
    panel = ReturnsPanel(dates_out, tickers, values[complete])
    return (panel, report) if return_report else panel


def subsample_universe(panel, n_assets, rng):
    """Uniformly random ``n_assets``-subset of the tickers, in original column order."""
    if n_assets > panel.n_assets:
        raise TooFewAssets(f"cannot draw {n_assets} assets from a universe of {panel.n_assets}")
    if n_assets < 1:
        raise ValidationError(f"n_assets must be positive, got {n_assets}")
    cols = np.sort(rng.choice(panel.n_assets, size=n_assets, replace=False))
    return panel.select(cols)


@dataclass(frozen=True)
class Stage2Config:
    """Settings of a walk-forward backtest over random sub-universes."""

    n_assets: int = 50
    n_paths: int = 250
    lookback: int = 125
    tau: float = None
    gamma: float = 2.5
    confidences: tuple = (0.95, 0.05)
    rebalance_period: int = 63
    master_seed: int = 0
    min_history: int = None
    kind: str = "prices"
    periods_per_year: int = PERIODS_PER_YEAR
    universe_csv: str = None

    def __post_init__(self):
        if self.tau is None:
            object.__setattr__(self, "tau", 1.0 / self.lookback)
        if self.min_history is None:
            object.__setattr__(self, "min_history", self.lookback)
        object.__setattr__(self, "confidences", tuple(float(t) for t in self.confidences))
        for name in ("n_assets", "n_paths", "lookback", "rebalance_period", "periods_per_year"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if self.min_history < self.lookback:
            raise ValidationError("min_history must be >= lookback")
        if not 0.0 < self.tau <= 1.0:
            raise OutOfRange(f"tau must lie in (0, 1], got {self.tau}")
        if not self.gamma > 0:
            raise OutOfRange(f"gamma must be > 0, got {self.gamma}")
        if any(not 0.0 <= t <= 1.0 for t in self.confidences):
            raise OutOfRange(f"confidences must lie in [0, 1], got {self.confidences}")

    def to_dict(self):
        d = asdict(self)
        d["confidences"] = list(self.confidences)
        return d

    @classmethod
    def from_dict(cls, d):
        unknown = sorted(set(d) - set(cls.__dataclass_fields__))
        if unknown:
            raise ValidationError(f"unknown config field(s): {', '.join(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ValidationError(str(exc)) from None


def minvol_views(trailing, cfg):
    """Estimates and views from the trailing window alone.

    Returns ``(cov_hat, views_drift, views_returns)`` with ``P = I``,
    ``nu = gamma C w_mVol`` and ``C_V = C`` (return space) or ``tau C``
    (drift space).
    """
    c_hat = estimate_cov(trailing)
    w_mv = min_vol_weights(c_hat, cfg.gamma).w
    mu_v = cfg.gamma * (c_hat @ w_mv)
    P = np.eye(c_hat.shape[0])
    vd, vr = make_views(P, mu_v, cfg.tau * c_hat, mu_v, c_hat)
    return c_hat, vd, vr


def walk_forward(returns, cfg):
    """Weights chosen at each rebalance of one sub-universe.

    Returns ``(dates, {label: [weights per rebalance]})``; rebalance ``t``
    only reads rows ``t - lookback`` to ``t - 1``.
    """
    R = np.asarray(returns)
    T = R.shape[0]
    dates = rebalance_dates(cfg.lookback, T, cfg.rebalance_period)
    labels = method_labels(cfg.confidences)
    weights = {m: [] for m in labels}
    for t in dates:
        c_hat, vd, vr = minvol_views(R[t - cfg.lookback:t], cfg)
        ws = allocate_all(c_hat, vd, vr, cfg.confidences, cfg.tau, cfg.gamma)
        for m in labels:
            weights[m].append(ws[m])
    return dates, weights


def run_backtest_path(panel, cfg, path):
    seed = [int(cfg.master_seed), int(path)]
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    sub = subsample_universe(panel, cfg.n_assets, rng)
    try:
        dates, weights = walk_forward(sub.returns, cfg)
    except GwbError as exc:
        raise type(exc)(f"path {path} ({', '.join(sub.tickers)}): {exc}") from exc
    T = sub.returns.shape[0]
    out = {}
    for m, ws in weights.items():
        out[m] = sharpe(hold_returns(sub.returns, ws, dates, T), cfg.periods_per_year)
    return path, seed, list(sub.tickers), out


def _star(args):
    return run_backtest_path(*args)


def run_stage2(panel, cfg, threads=1):
    """Backtest every methodology on ``cfg.n_paths`` random sub-universes."""
    if panel.n_assets <= cfg.n_assets:
        raise TooFewAssets(f"universe of {panel.n_assets} tickers must exceed n_assets={cfg.n_assets}")
    if panel.returns.shape[0] < cfg.lookback + 2:
        raise TooFewAssets(f"panel has {panel.returns.shape[0]} rows, lookback is {cfg.lookback}")
    jobs = [(panel, cfg, p) for p in range(cfg.n_paths)]
    if threads and threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(_star, jobs))
    else:
        results = [_star(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    labels = method_labels(cfg.confidences)
    S = np.array([[r[3][m] for m in labels] for r in results])
    config = {"stage": 2, **cfg.to_dict(), "universe_size": panel.n_assets,
              "first_date": panel.dates[0], "last_date": panel.dates[-1]}
    return RunReport.from_sharpe(labels, S, config=config, seeds=[r[1] for r in results])
