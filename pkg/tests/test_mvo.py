import numpy as np
import pytest

from conftest import random_spd
from gwballoc.errors import NonConvergence, OutOfRange, ValidationError
from gwballoc.mvo import MvoProblem, Weights, kkt_residuals, min_vol_weights, project_simplex, solve_mvo
from gwballoc.updates import equilibrium_drift


def _random_simplex(rng, n, k):
    return rng.dirichlet(np.ones(n) * rng.choice([0.2, 1.0, 5.0]), size=k)


class TestProjection:
    def test_inside_unchanged(self):
        x = np.array([0.2, 0.3, 0.5])
        np.testing.assert_allclose(project_simplex(x), x, atol=1e-15)

    def test_matches_qp_definition(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            v = rng.standard_normal(5) * 2
            x = project_simplex(v)
            assert abs(x.sum() - 1) <= 1e-12 and x.min() >= 0
            # projection optimality: (v - x)^T (y - x) <= 0 for every simplex y
            Y = _random_simplex(rng, 5, 200)
            assert np.max((Y - x) @ (v - x)) <= 1e-12


class TestSolve:
    def test_zero_drift_identity(self):
        np.testing.assert_allclose(solve_mvo(MvoProblem(np.zeros(5), np.eye(5))).w, np.full(5, 0.2), atol=1e-10)

    def test_two_asset(self):
        np.testing.assert_allclose(solve_mvo(MvoProblem([0.3, 0.1], np.eye(2), 1.0)).w, [0.6, 0.4], atol=1e-8)

    def test_corner(self):
        np.testing.assert_allclose(solve_mvo(MvoProblem([5.0, 0.0], np.eye(2), 1.0)).w, [1.0, 0.0], atol=1e-12)

    def test_equilibrium_round_trip(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(2, 12))
            C = random_spd(rng, n)
            wb = rng.dirichlet(np.ones(n) * 3)
            w = solve_mvo(MvoProblem(equilibrium_drift(C, wb, 2.5), C, 2.5))
            np.testing.assert_allclose(w.w, wb, atol=1e-6)

    def test_kkt_and_dominance(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = int(rng.integers(2, 10))
            prob = MvoProblem(0.1 * rng.standard_normal(n), random_spd(rng, n, rank=int(rng.integers(1, n + 1))),
                              float(rng.uniform(0.5, 5)))
            w = solve_mvo(prob)
            st, sl = kkt_residuals(prob, w.w)
            assert st <= 1e-7 and sl <= 1e-8
            assert abs(w.w.sum() - 1) <= 1e-8 and w.w.min() >= -1e-10
            X = _random_simplex(rng, n, 1000)
            vals = X @ (prob.drift - prob.rf) - 0.5 * prob.gamma * np.einsum("ij,jk,ik->i", X, prob.cov, X)
            assert prob.objective(w.w) >= vals.max() - 1e-8

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = 6
            C, m = random_spd(rng, n), 0.2 * rng.standard_normal(n)
            a = solve_mvo(MvoProblem(m, C, 2.5)).w
            b = solve_mvo(MvoProblem(7.0 * m, C, 7.0 * 2.5)).w
            np.testing.assert_allclose(a, b, atol=1e-8)

    def test_deterministic_on_flat_direction(self):
        C = np.ones((3, 3))
        p = MvoProblem(np.zeros(3), C)
        np.testing.assert_array_equal(solve_mvo(p).w, solve_mvo(p).w)

    def test_iteration_cap(self, monkeypatch):
        # the active-set polish finishes small problems on its own; disable it
        monkeypatch.setattr("gwballoc.mvo._polish", lambda prob, x, max_steps=None: x)
        rng = np.random.default_rng(4)
        prob = MvoProblem(0.01 * rng.standard_normal(8), random_spd(rng, 8), 2.5)
        with pytest.raises(NonConvergence) as info:
            solve_mvo(prob, max_iter=1)
        assert info.value.residual is not None

    def test_rejects_bad_gamma(self):
        with pytest.raises(OutOfRange):
            MvoProblem([0.0], [[1.0]], gamma=0.0)


class TestMinVol:
    def test_two_asset(self):
        np.testing.assert_allclose(min_vol_weights(np.diag([1.0, 4.0]), 2.5).w, [0.8, 0.2], atol=1e-8)

    def test_identity(self):
        np.testing.assert_allclose(min_vol_weights(np.eye(7), 1.0).w, np.full(7, 1 / 7), atol=1e-10)

    def test_beats_vertices(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            C = random_spd(rng, 6)
            w = min_vol_weights(C, 2.5).w
            assert w @ C @ w <= np.diag(C).min() + 1e-12


class TestWeights:
    def test_rejects_off_simplex(self):
        with pytest.raises(ValidationError):
            Weights([0.5, 0.6])
        with pytest.raises(ValidationError):
            Weights([1.1, -0.1])
