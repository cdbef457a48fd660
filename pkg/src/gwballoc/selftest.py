"""Compact invariant suite run by ``gwballoc selftest``."""

import math

import numpy as np

from .gaussian import GaussianMeasure, gwb_lagrangian, wasserstein2_sq
from .linalg import pseudo_det, pseudo_inverse, sym_sqrt
from .mvo import MvoProblem, solve_mvo
from .oracle import gwb_numeric_oracle
from .simulation import Stage1Config, run_stage1, sample_wishart
from .updates import bl1_update, equilibrium_drift, gwb_core_update, gwb_cross_checks
from .views import PriorSpec, Target, ViewSet


def _spd(rng, n, rank=None):
    X = rng.standard_normal((n, rank or n + 2))
    return X @ X.T / X.shape[1]


def _check_sqrt(rng):
    worst = 0.0
    for _ in range(20):
        M = _spd(rng, int(rng.integers(1, 7)))
        R = sym_sqrt(M)
        worst = max(worst, np.max(np.abs(R @ R - M)))
    return worst <= 1e-10, f"max |R R - M| = {worst:.2e}"


def _check_pinv(rng):
    worst = 0.0
    for rank in (1, 3, 4):
        Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        lam = np.zeros(4)
        lam[:rank] = rng.uniform(0.5, 2.0, rank) * rng.choice([-1.0, 1.0], rank)
        M = (Q * lam) @ Q.T
        Mp = pseudo_inverse(M)
        worst = max(worst, np.max(np.abs(M @ Mp @ M - M)), np.max(np.abs(Mp @ M @ Mp - Mp)))
    d = abs(pseudo_det(np.diag([2.0, 0.0, 3.0])) - 6.0)
    return worst <= 1e-9 and d <= 1e-12, f"Penrose residual {worst:.2e}"


def _check_w2(rng):
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 5))
        a = GaussianMeasure(rng.standard_normal(n), _spd(rng, n, max(1, n - 1)))
        b = GaussianMeasure(rng.standard_normal(n), _spd(rng, n))
        worst = max(worst, abs(wasserstein2_sq(a, b) - wasserstein2_sq(b, a)))
    one = wasserstein2_sq(GaussianMeasure([0.0], [[1.0]]), GaussianMeasure([1.0], [[4.0]]))
    return worst <= 1e-9 and abs(one - 2.0) <= 1e-12, f"asymmetry {worst:.2e}, 1-D value {one}"


def _check_oracle(rng):
    worst_m = worst_l = 0.0
    for k in range(4):
        n = 3
        C = _spd(rng, n)
        mu = rng.standard_normal(n)
        v = ViewSet(rng.standard_normal((2, n)), rng.standard_normal(2), _spd(rng, 2))
        lam = [0.25, 1.0, 4.0, 19.0][k]
        m, c = gwb_core_update(mu, C, v, lam)
        mo, co = gwb_numeric_oracle(mu, C, v, lam, seed=k)
        fp, fv = GaussianMeasure(mu, C), GaussianMeasure(v.nu, v.cov_v)
        gap = gwb_lagrangian(GaussianMeasure(m, c), fp, fv, v.P, lam) - gwb_lagrangian(
            GaussianMeasure(mo, co), fp, fv, v.P, lam)
        worst_m, worst_l = max(worst_m, np.max(np.abs(m - mo))), max(worst_l, gap)
    return worst_m <= 1e-5 and worst_l <= 1e-8, f"|dm| {worst_m:.2e}, Lagrangian gap {worst_l:.2e}"


def _check_limits(rng):
    n = 4
    C, mu = _spd(rng, n), rng.standard_normal(n)
    v = ViewSet(rng.standard_normal((2, n)), rng.standard_normal(2), _spd(rng, 2))
    m0, c0 = gwb_core_update(mu, C, v, 0.0)
    mi, ci = gwb_core_update(mu, C, v, math.inf)
    e0 = max(np.max(np.abs(m0 - mu)), np.max(np.abs(c0 - C)))
    ei = max(np.max(np.abs(v.P @ mi - v.nu)), np.max(np.abs(v.P @ ci @ v.P.T - v.cov_v)))
    return e0 == 0.0 and ei <= 1e-10, f"lambda=0 error {e0:.1e}, lambda=inf error {ei:.1e}"


def _check_forms(rng):
    n = 4
    v = ViewSet(np.eye(n), rng.standard_normal(n), _spd(rng, n))
    r = gwb_cross_checks(rng.standard_normal(n), _spd(rng, n), v, 3.0)
    return r["max_rel_dev"] <= 1e-8, f"max relative deviation {r['max_rel_dev']:.2e}"


def _check_bl_scalar(rng):
    worst = 0.0
    for _ in range(50):
        mu, s2, nu, v2, tau = rng.normal(), rng.uniform(0.1, 2), rng.normal(), rng.uniform(0.1, 2), rng.uniform(0.01, 1)
        post = bl1_update(PriorSpec([mu], [[s2]], tau), ViewSet([[1.0]], [nu], [[v2]], Target.DRIFT))
        em = (v2 * mu + tau * s2 * nu) / (v2 + tau * s2)
        ev = s2 + tau * s2 * v2 / (tau * s2 + v2)
        worst = max(worst, abs(post.mean[0] - em), abs(post.cov[0, 0] - ev))
    return worst <= 1e-12, f"max deviation {worst:.2e}"


def _check_mvo(rng):
    C = _spd(rng, 6)
    wb = rng.dirichlet(np.ones(6))
    w = solve_mvo(MvoProblem(equilibrium_drift(C, wb, 2.5), C, 2.5))
    two = solve_mvo(MvoProblem([0.3, 0.1], np.eye(2), 1.0)).w
    err = max(np.max(np.abs(w.w - wb)), np.max(np.abs(two - [0.6, 0.4])))
    return err <= 1e-6, f"round-trip error {err:.2e}"


def _check_wishart(rng):
    scale = _spd(rng, 3)
    draws = [sample_wishart(7, scale, rng) / 7 for _ in range(2000)]
    err = np.linalg.norm(np.mean(draws, axis=0) - scale)
    return err <= 0.1, f"|E[W]/df - scale|_F = {err:.3f} over 2000 draws"


def _check_determinism(rng):
    cfg = Stage1Config(n_assets=3, horizon=200, n_paths=3, lookback=30, forward=40, master_seed=7)
    a, b = run_stage1(cfg), run_stage1(cfg)
    same = np.array_equal(a.sharpe, b.sharpe) and np.array_equal(a.tstat, b.tstat)
    return same, "identical Sharpe and t matrices" if same else "runs differ"


CHECKS = [
    ("matrix square root", _check_sqrt),
    ("pseudo-inverse", _check_pinv),
    ("Wasserstein distance", _check_w2),
    ("closed form vs numeric oracle", _check_oracle),
    ("confidence limits", _check_limits),
    ("alternate covariance forms", _check_forms),
    ("scalar Black-Litterman", _check_bl_scalar),
    ("MVO round trip", _check_mvo),
    ("Wishart mean", _check_wishart),
    ("simulation determinism", _check_determinism),
]


def run_selftest(seed=0, out=print):
    """Run every check; print one line each and return True if all pass."""
    rng = np.random.default_rng(seed)
    ok_all = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # report, do not crash the suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        ok_all &= bool(ok)
        out(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return ok_all
