"""Sharpe ratios, pairwise outperformance, t statistics and report files."""

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GwbError, LengthMismatch, TooShort, ValidationError, ZeroVariance
from .jsonio import dumps_canonical

log = logging.getLogger(__name__)

PERIODS_PER_YEAR = 252
T_CRITICAL = 3.125


def sharpe(returns, periods_per_year=PERIODS_PER_YEAR):
    """Annualised Sharpe ratio of a per-period return series (risk-free rate 0)."""
    r = np.asarray(returns, dtype=float)
    if r.ndim != 1 or r.shape[0] < 2:
        raise TooShort(f"need at least 2 returns, got {r.shape}")
    sd = r.std(ddof=1)
    if sd <= 1e-14 * max(np.max(np.abs(r)), 1e-300) or sd == 0.0:
        raise ZeroVariance("return series has zero variance")
    return float(r.mean() / sd * math.sqrt(periods_per_year))


def _paired(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.shape} vs {b.shape}")
    if a.ndim != 1 or a.shape[0] < 2:
        raise TooShort(f"need at least 2 paths, got {a.shape}")
    return a, b


def outperformance(sharpe_a, sharpe_b):
    """Mean Sharpe difference ``mean(S_A - S_B)`` over paths."""
    a, b = _paired(sharpe_a, sharpe_b)
    return float(np.mean(a - b))


def t_statistic(sharpe_a, sharpe_b):
    """Paired t statistic ``sqrt(N) mean(d) / std(d)`` with ``N - 1`` degrees of freedom."""
    a, b = _paired(sharpe_a, sharpe_b)
    d = a - b
    sd = d.std(ddof=1)
    if sd <= 1e-14 * max(np.max(np.abs(d)), 1e-300) or sd == 0.0:
        raise ZeroVariance("Sharpe differences have zero variance")
    return float(math.sqrt(d.shape[0]) * d.mean() / sd)


def is_significant(t, t_crit=T_CRITICAL):
    return abs(t) > t_crit


@dataclass
class RunReport:
    """Per-path Sharpe ratios and the pairwise comparison matrices.

    ``delta_s[i, j]`` is the outperformance of ``methods[i]`` over ``methods[j]``.
    Pairs whose Sharpe differences have zero variance get ``t = 0`` and are
    listed in ``zero_variance_pairs``.
    """

    methods: list
    sharpe: np.ndarray
    delta_s: np.ndarray
    tstat: np.ndarray
    config: dict = field(default_factory=dict)
    seeds: list = field(default_factory=list)
    zero_variance_pairs: list = field(default_factory=list)

    @classmethod
    def from_sharpe(cls, methods, sharpe_matrix, config=None, seeds=None):
        S = np.asarray(sharpe_matrix, dtype=float)
        M = len(methods)
        if S.ndim != 2 or S.shape[1] != M:
            raise LengthMismatch(f"Sharpe matrix {S.shape} does not match {M} methods")
        ds = np.zeros((M, M))
        ts = np.zeros((M, M))
        flat = []
        for i in range(M):
            for j in range(i + 1, M):
                ds[i, j] = outperformance(S[:, i], S[:, j])
                ds[j, i] = -ds[i, j]
                try:
                    ts[i, j] = t_statistic(S[:, i], S[:, j])
                except ZeroVariance:
                    flat.append([methods[i], methods[j]])
                    log.info("zero-variance Sharpe difference for %s vs %s", methods[i], methods[j])
                ts[j, i] = -ts[i, j]
        return cls(list(methods), S, ds, ts, dict(config or {}), list(seeds or []), flat)

    def index(self, method):
        return self.methods.index(method)

    def pair(self, a, b):
        i, j = self.index(a), self.index(b)
        return float(self.delta_s[i, j]), float(self.tstat[i, j])

    def to_dict(self):
        return {
            "methods": self.methods,
            "sharpe": self.sharpe.tolist(),
            "delta_s": self.delta_s.tolist(),
            "tstat": self.tstat.tolist(),
            "config": self.config,
            "seeds": self.seeds,
            "zero_variance_pairs": self.zero_variance_pairs,
            "t_critical": T_CRITICAL,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                methods=list(d["methods"]),
                sharpe=np.asarray(d["sharpe"], dtype=float),
                delta_s=np.asarray(d["delta_s"], dtype=float),
                tstat=np.asarray(d["tstat"], dtype=float),
                config=dict(d.get("config", {})),
                seeds=list(d.get("seeds", [])),
                zero_variance_pairs=list(d.get("zero_variance_pairs", [])),
            )
        except KeyError as exc:
            raise ValidationError(f"report JSON is missing field {exc}") from None


def load_report(path):
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    return RunReport.from_dict(d)


def fd_edges(values):
    """Freedman-Diaconis histogram edges; falls back to a single bin."""
    x = np.asarray(values, dtype=float)
    x = x[np.isfinite(x)]
    lo, hi = (float(x.min()), float(x.max())) if x.size else (0.0, 1.0)
    q75, q25 = np.percentile(x, [75, 25]) if x.size else (0.0, 0.0)
    width = 2.0 * (q75 - q25) / max(x.size, 1) ** (1.0 / 3.0)
    if width <= 0 or hi <= lo:
        return np.array([lo - 0.5, hi + 0.5]) if hi <= lo else np.array([lo, hi])
    nbins = max(1, int(math.ceil((hi - lo) / width)))
    return np.linspace(lo, hi, nbins + 1)


def histogram_rows(report):
    edges = fd_edges(report.sharpe.ravel())
    rows = []
    for k, m in enumerate(report.methods):
        counts, _ = np.histogram(report.sharpe[:, k], bins=edges)
        for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
            rows.append((m, float(lo), float(hi), int(c)))
    return rows


def _fmt(x):
    return format(float(x), ".17g")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def emit_report(report, out, fmt="json"):
    """Write ``report`` as canonical JSON, or as a set of CSV tables.

    For ``fmt="csv"``, ``out`` is a file stem: ``<stem>_pairs.csv`` (one row
    per ordered off-diagonal pair), ``<stem>_delta_s.csv`` and
    ``<stem>_tstat.csv`` (rows = GWB variants, columns = all methods) and
    ``<stem>_hist.csv``. Returns the list of written paths.
    """
    out = Path(out)
    try:
        if fmt == "json":
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(dumps_canonical(report.to_dict()) + "\n")
            return [out]
        if fmt != "csv":
            raise ValidationError(f"unknown report format {fmt!r}")
        stem = out.with_suffix("") if out.suffix else out
        stem.parent.mkdir(parents=True, exist_ok=True)
        M = report.methods
        paths = []
        p = Path(f"{stem}_pairs.csv")
        rows = [
            (a, b, _fmt(report.delta_s[i, j]), _fmt(report.tstat[i, j]),
             int(is_significant(report.tstat[i, j])))
            for i, a in enumerate(M) for j, b in enumerate(M) if i != j
        ]
        _write_csv(p, ["method_a", "method_b", "delta_s", "tstat", "significant"], rows)
        paths.append(p)
        gwb_rows = [i for i, m in enumerate(M) if m.startswith("GWB")] or list(range(len(M)))
        for name, mat in (("delta_s", report.delta_s), ("tstat", report.tstat)):
            p = Path(f"{stem}_{name}.csv")
            _write_csv(p, ["method"] + M, [[M[i]] + [_fmt(v) for v in mat[i]] for i in gwb_rows])
            paths.append(p)
        p = Path(f"{stem}_hist.csv")
        _write_csv(p, ["method", "bin_left", "bin_right", "count"],
                   [(m, _fmt(lo), _fmt(hi), c) for m, lo, hi, c in histogram_rows(report)])
        paths.append(p)
        return paths
    except OSError as exc:
        raise GwbError(f"cannot write report to {out}: {exc}") from exc
