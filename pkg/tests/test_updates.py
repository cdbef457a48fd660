import math

import numpy as np
import pytest

from conftest import random_spd
from gwballoc.errors import NegativeLambda, NonPsdPrior, NotApplicable, SingularViewCovariance, TargetMismatch
from gwballoc.gaussian import GaussianMeasure, gwb_lagrangian, pushforward, wasserstein2_sq
from gwballoc.linalg import sym_sqrt
from gwballoc.oracle import gwb_numeric_oracle
from gwballoc.updates import (Method, PosteriorUpdate, bl1_update, bl2_update, equilibrium_drift,
                              gwb1_update, gwb2_update, gwb_core_update, gwb_cross_checks)
from gwballoc.views import PriorSpec, Target, ViewSet


def _instance(rng, n, k, target=Target.RETURNS):
    P = rng.standard_normal((k, n))
    return rng.standard_normal(n), random_spd(rng, n), ViewSet(P, rng.standard_normal(k), random_spd(rng, k), target)


def _literal_cov(cov, views, lam):
    """Covariance update written out with explicit inverses, as an oracle."""
    P, n = views.P, cov.shape[0]
    W = np.linalg.inv(np.eye(n) + lam * P.T @ P)
    A = W @ cov @ W
    Ah = sym_sqrt(A)
    Aih = np.linalg.inv(Ah)
    B = lam * W @ Aih @ sym_sqrt(Ah @ P.T @ views.cov_v @ P @ Ah) @ Aih @ W
    return W, B


def _lagrangian(m, C, mu, cov, views, lam):
    return gwb_lagrangian(GaussianMeasure(m, C), GaussianMeasure(mu, cov),
                          GaussianMeasure(views.nu, views.cov_v), views.P, lam)


class TestEquilibriumDrift:
    def test_identity(self):
        np.testing.assert_allclose(equilibrium_drift(np.eye(4), np.full(4, 0.25), 2.5), np.full(4, 0.625))

    def test_zero_gamma(self):
        np.testing.assert_allclose(equilibrium_drift(np.eye(3), np.full(3, 1 / 3), 0.0, rf=0.01), np.full(3, 0.01))

    def test_unconstrained_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            C = random_spd(rng, 5)
            w = rng.dirichlet(np.ones(5))
            # unconstrained maximiser of m'x - (gamma/2) x'Cx is C^{-1} m / gamma
            np.testing.assert_allclose(np.linalg.solve(C, equilibrium_drift(C, w, 2.5)) / 2.5, w, atol=1e-8)


class TestBlackLitterman:
    def test_scalar_drift_views(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            mu, s2, nu, v2, tau = rng.normal(), rng.uniform(0.1, 2), rng.normal(), rng.uniform(0.1, 2), rng.uniform(0.01, 1)
            post = bl1_update(PriorSpec([mu], [[s2]], tau), ViewSet([[1.0]], [nu], [[v2]], Target.DRIFT))
            assert post.mean[0] == pytest.approx((v2 * mu + tau * s2 * nu) / (v2 + tau * s2), abs=1e-12)
            assert post.cov[0, 0] == pytest.approx(s2 + tau * s2 * v2 / (tau * s2 + v2), abs=1e-12)
            assert post.method is Method.BL1

    def test_uninformative_drift_views(self):
        rng = np.random.default_rng(2)
        mu, C, v = _instance(rng, 4, 2, Target.DRIFT)
        prior = PriorSpec(mu, C, 0.1)
        exact = bl1_update(prior, ViewSet(v.P, v.P @ mu, 1e12 * np.eye(2), Target.DRIFT))
        np.testing.assert_allclose(exact.mean, mu, rtol=1e-6)
        vague = bl1_update(prior, ViewSet(v.P, v.nu, 1e12 * np.eye(2), Target.DRIFT))
        np.testing.assert_allclose(vague.mean, mu, rtol=1e-6, atol=1e-9)

    def test_woodbury_matches_explicit_inverse(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n, k = int(rng.integers(2, 6)), int(rng.integers(1, 4))
            mu, C, v = _instance(rng, n, k, Target.DRIFT)
            tau = rng.uniform(0.05, 1.0)
            post = bl1_update(PriorSpec(mu, C, tau), v)
            Ci, Vi = np.linalg.inv(tau * C), np.linalg.inv(v.cov_v)
            H = np.linalg.inv(Ci + v.P.T @ Vi @ v.P)
            np.testing.assert_allclose(post.mean, H @ (Ci @ mu + v.P.T @ Vi @ v.nu), atol=1e-9)
            np.testing.assert_allclose(post.cov, C + H, atol=1e-9)

    def test_posterior_exceeds_estimate_in_psd_order(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            mu, C, v = _instance(rng, 4, 3, Target.DRIFT)
            post = bl1_update(PriorSpec(mu, C, 0.2), v)
            assert np.linalg.eigvalsh(post.cov - C).min() >= -1e-12

    def test_returns_equal_precision(self):
        rng = np.random.default_rng(5)
        mu, C = rng.standard_normal(3), random_spd(rng, 3)
        nu = rng.standard_normal(3)
        post = bl2_update(mu, C, ViewSet(np.eye(3), nu, C))
        np.testing.assert_allclose(post.mean, (mu + nu) / 2, atol=1e-12)
        np.testing.assert_allclose(post.cov, C / 2, atol=1e-12)

    def test_returns_uninformative(self):
        rng = np.random.default_rng(6)
        mu, C, v = _instance(rng, 3, 2)
        post = bl2_update(mu, C, ViewSet(v.P, v.nu, 1e12 * np.eye(2)))
        np.testing.assert_allclose(post.mean, mu, rtol=1e-6, atol=1e-9)

    def test_returns_scalar(self):
        post = bl2_update([0.4], [[2.0]], ViewSet([[1.0]], [0.4], [[3.0]]))
        assert post.mean[0] == 0.4
        assert post.cov[0, 0] == pytest.approx(2.0 * 3.0 / 5.0, abs=1e-15)

    def test_singular_view_cov(self):
        with pytest.raises(SingularViewCovariance):
            bl2_update([0.0, 0.0], np.eye(2), ViewSet(np.eye(2), [0.0, 0.0], np.diag([1.0, 0.0])))

    def test_target_mismatch(self):
        with pytest.raises(TargetMismatch):
            bl1_update(PriorSpec([0.0], [[1.0]]), ViewSet([[1.0]], [0.0], [[1.0]], Target.RETURNS))
        with pytest.raises(TargetMismatch):
            bl2_update([0.0], [[1.0]], ViewSet([[1.0]], [0.0], [[1.0]], Target.DRIFT))


class TestGwbCore:
    def test_lambda_zero_exact(self):
        rng = np.random.default_rng(7)
        mu, C, v = _instance(rng, 4, 2)
        m, c = gwb_core_update(mu, C, v, 0.0)
        np.testing.assert_array_equal(m, mu)
        np.testing.assert_array_equal(c, C)

    def test_diagonal_volatility_formula(self):
        rng = np.random.default_rng(8)
        for lam in (0.25, 1.0, 4.0, 19.0):
            sp, sv = rng.uniform(0.1, 2.0, 4), rng.uniform(0.1, 2.0, 4)
            _, c = gwb_core_update(np.zeros(4), np.diag(sp**2), ViewSet(np.eye(4), np.zeros(4), np.diag(sv**2)), lam)
            np.testing.assert_allclose(np.sqrt(np.diag(c)), (sp + lam * sv) / (1 + lam), atol=1e-12)
            np.testing.assert_allclose(c - np.diag(np.diag(c)), 0.0, atol=1e-15)

    def test_matches_literal_theorem(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            n = int(rng.integers(2, 5))
            k = int(rng.integers(1, n + 1))
            mu, C, v = _instance(rng, n, k)
            lam = float(rng.choice([0.25, 1.0, 4.0, 19.0]))
            m, c = gwb_core_update(mu, C, v, lam)
            W, B = _literal_cov(C, v, lam)
            np.testing.assert_allclose(m, W @ (mu + lam * v.P.T @ v.nu), atol=1e-10)
            # for k < n the literal inner root acts on a singular matrix and
            # picks up sqrt(round-off) ~ 1e-8, so the oracle itself is looser there
            atol = 1e-10 if k == n else 1e-7
            np.testing.assert_allclose(c, (W + B) @ C @ (W + B), rtol=1e-8, atol=atol)

    def test_infinite_lambda_identity_views(self):
        rng = np.random.default_rng(10)
        mu, C, v = _instance(rng, 4, 4)
        v = ViewSet(np.eye(4), v.nu, v.cov_v)
        post = gwb2_update(mu, C, v, math.inf)
        np.testing.assert_allclose(post.mean, v.nu, atol=1e-12)
        np.testing.assert_allclose(post.cov, v.cov_v, atol=1e-12)

    def test_infinite_lambda_is_limit(self):
        rng = np.random.default_rng(11)
        mu, C, v = _instance(rng, 4, 2)
        mi, ci = gwb_core_update(mu, C, v, math.inf)
        mb, cb = gwb_core_update(mu, C, v, 1e8)
        np.testing.assert_allclose(v.P @ mi, v.nu, atol=1e-12)
        np.testing.assert_allclose(v.P @ ci @ v.P.T, v.cov_v, atol=1e-11)
        np.testing.assert_allclose(mb, mi, atol=1e-6)
        np.testing.assert_allclose(cb, ci, atol=1e-6)

    def test_large_lambda_residual_is_exact(self):
        # for any P the drift residual at finite lambda is U diag(1/(1 + lam s^2)) U^T (P mu - nu)
        rng = np.random.default_rng(26)
        for _ in range(100):
            n = int(rng.integers(2, 6))
            mu, C, v = _instance(rng, n, int(rng.integers(1, n + 1)))
            for lam in (1.0, 1e4, 1e8):
                m, _ = gwb_core_update(mu, C, v, lam)
                U, s, _ = np.linalg.svd(v.P, full_matrices=False)
                exact = U @ ((U.T @ (v.P @ mu - v.nu)) / (1 + lam * s * s))
                np.testing.assert_allclose(v.P @ m - v.nu, exact, atol=1e-10)

    def test_monotone_interpolation(self):
        rng = np.random.default_rng(12)
        grid = [0.0, 0.25, 1.0, 4.0, 19.0, 1e4]
        for _ in range(100):
            n = int(rng.integers(1, 5))
            mu, C, v = _instance(rng, n, n)
            v = ViewSet(np.eye(n), v.nu, v.cov_v)
            prior, view = GaussianMeasure(mu, C), GaussianMeasure(v.nu, v.cov_v)
            d_p, d_v = [], []
            for lam in grid:
                post = GaussianMeasure(*gwb_core_update(mu, C, v, lam))
                d_p.append(wasserstein2_sq(post, prior))
                d_v.append(wasserstein2_sq(pushforward(post, v.P), view))
            assert np.all(np.diff(d_p) >= -1e-12)
            assert np.all(np.diff(d_v) <= 1e-12)

    def test_optimal_against_perturbations(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            mu, C, v = _instance(rng, 3, 2)
            lam = 4.0
            m, c = gwb_core_update(mu, C, v, lam)
            best = _lagrangian(m, c, mu, C, v, lam)
            for _ in range(50):
                d = rng.standard_normal(3)
                d *= rng.uniform(1e-3, 1e-1) / np.linalg.norm(d)
                E = np.eye(3) + 1e-2 * rng.standard_normal((3, 3))
                assert _lagrangian(m + d, E @ c @ E.T, mu, C, v, lam) > best

    def test_negative_branch_is_worse(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            n = int(rng.integers(2, 5))
            mu, C, v = _instance(rng, n, int(rng.integers(1, n + 1)))
            lam = float(rng.choice([0.25, 1.0, 4.0, 19.0]))
            m, c = gwb_core_update(mu, C, v, lam)
            W, B = _literal_cov(C, v, lam)
            assert _lagrangian(m, (W - B) @ C @ (W - B), mu, C, v, lam) > _lagrangian(m, c, mu, C, v, lam)

    def test_duplicated_rows_match_deduplicated_oracle(self):
        # stacking [P; P] doubles the view distance, so it equals the problem with 2 * lambda
        rng = np.random.default_rng(15)
        for _ in range(5):
            mu, C, v = _instance(rng, 3, 2)
            lam = 2.0
            dup = ViewSet(np.vstack([v.P, v.P]), np.concatenate([v.nu, v.nu]), np.block([[v.cov_v, v.cov_v]] * 2))
            m, c = gwb_core_update(mu, C, dup, lam)
            mo, co = gwb_numeric_oracle(mu, C, v, 2 * lam)
            assert _lagrangian(m, c, mu, C, dup, lam) == pytest.approx(_lagrangian(mo, co, mu, C, v, 2 * lam), abs=1e-6)
            np.testing.assert_allclose(m, mo, atol=1e-5)

    def test_singular_view_covariance(self):
        rng = np.random.default_rng(16)
        mu, C, _ = _instance(rng, 3, 2)
        v = ViewSet(np.eye(3)[:2], [0.1, -0.1], np.diag([0.5, 0.0]))
        m, c = gwb_core_update(mu, C, v, 3.0)
        assert np.linalg.eigvalsh(c).min() >= -1e-12

    def test_errors(self):
        rng = np.random.default_rng(17)
        mu, C, v = _instance(rng, 3, 2)
        with pytest.raises(NegativeLambda):
            gwb_core_update(mu, C, v, -1.0)
        with pytest.raises(NonPsdPrior):
            gwb_core_update(mu, np.diag([1.0, 1.0, 0.0]), v, 1.0)


class TestGwbInstantiations:
    def test_gwb1_lambda_zero(self):
        rng = np.random.default_rng(18)
        mu, C, v = _instance(rng, 3, 2, Target.DRIFT)
        post = gwb1_update(PriorSpec(mu, C, 0.1), v, 0.0)
        np.testing.assert_array_equal(post.mean, mu)
        np.testing.assert_allclose(post.cov, C + 0.1 * C, atol=1e-15)

    def test_gwb1_infinite_identity_views(self):
        rng = np.random.default_rng(19)
        mu, C, v = _instance(rng, 3, 3, Target.DRIFT)
        v = ViewSet(np.eye(3), v.nu, v.cov_v, Target.DRIFT)
        post = gwb1_update(PriorSpec(mu, C, 0.1), v, math.inf)
        np.testing.assert_allclose(post.cov, C + v.cov_v, atol=1e-12)
        np.testing.assert_allclose(post.mean, v.nu, atol=1e-12)

    @pytest.mark.parametrize("s2v, expected", [(0.2, 1.2), (1.0, 1.0 + ((math.sqrt(0.2) + 1.0) / 2) ** 2)])
    def test_gwb1_scalar(self, s2v, expected):
        post = gwb1_update(PriorSpec([0.3], [[1.0]], 0.2), ViewSet([[1.0]], [0.3], [[s2v]], Target.DRIFT), 1.0)
        assert post.mean[0] == pytest.approx(0.3, abs=1e-15)
        assert post.cov[0, 0] == pytest.approx(expected, abs=1e-12)

    def test_gwb2_lambda_zero(self):
        rng = np.random.default_rng(20)
        mu, C, v = _instance(rng, 3, 2)
        post = gwb2_update(mu, C, v, 0.0)
        np.testing.assert_array_equal(post.mean, mu)
        np.testing.assert_array_equal(post.cov, C)

    def test_lambda_from_confidence(self):
        rng = np.random.default_rng(21)
        mu, C, v = _instance(rng, 3, 2)
        v = ViewSet(v.P, v.nu, v.cov_v, confidence=0.95)
        assert gwb2_update(mu, C, v).lambda_used == pytest.approx(19.0)

    def test_gwb2_matches_oracle(self):
        rng = np.random.default_rng(22)
        mu, C, v = _instance(rng, 3, 2)
        post = gwb2_update(mu, C, v, 19.0)
        mo, co = gwb_numeric_oracle(mu, C, v, 19.0)
        np.testing.assert_allclose(post.mean, mo, atol=1e-5)
        assert wasserstein2_sq(GaussianMeasure(mo, post.cov), GaussianMeasure(mo, co)) <= 1e-4


class TestCrossChecks:
    def test_identity_views_agree(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            mu, C, v = _instance(rng, 4, 4)
            r = gwb_cross_checks(mu, C, ViewSet(np.eye(4), v.nu, v.cov_v), float(rng.uniform(0.1, 20)))
            assert r["max_rel_dev"] <= 1e-8
            assert r["inverse_identity"] <= 1e-8

    def test_lambda_zero_gives_prior(self):
        rng = np.random.default_rng(24)
        mu, C, v = _instance(rng, 3, 3)
        r = gwb_cross_checks(mu, C, ViewSet(np.eye(3), v.nu, v.cov_v), 0.0)
        assert r["max_rel_dev"] <= 1e-12

    def test_degenerate_not_applicable(self):
        rng = np.random.default_rng(25)
        mu, C, v = _instance(rng, 3, 1)
        with pytest.raises(NotApplicable):
            gwb_cross_checks(mu, C, v, 1.0)


class TestPosteriorSerialisation:
    @pytest.mark.parametrize("lam", [2.0, math.inf, float("nan")])
    def test_round_trip(self, lam):
        p = PosteriorUpdate(np.array([0.1, 0.2]), np.eye(2), Method.GWB2, lam)
        q = PosteriorUpdate.from_dict(p.to_dict())
        assert q.method is Method.GWB2
        np.testing.assert_array_equal(q.cov, p.cov)
        assert (math.isnan(q.lambda_used) and math.isnan(lam)) or q.lambda_used == lam
