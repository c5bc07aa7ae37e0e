import unittest
from dataclasses import replace

import numpy as np

from fixtures import fast_config, load_small, random_dataset
from uvds.exceptions import ConfigError, NonFiniteError, ShapeMismatchError
from uvds.graphs import build_graphset
from uvds.kernels import orthogonality_error
from uvds.solver import (
    IMPLICIT_WEIGHT_SHARE,
    ModelParams,
    SolverConfig,
    _e_diagonal,
    assemble_v_system,
    cayley_factor,
    diffusion_stats,
    fit,
    initial_params,
    loss,
    pi_statistic,
    q_gradient,
    q_objective,
    q_step,
    v_step,
)
from uvds.zsl import linear_regression_baseline, seen_prototypes


def random_orthogonal(rng, d):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return q


class TestSolverConfig(unittest.TestCase):
    def test_defaults(self):
        cfg = SolverConfig()
        self.assertEqual(cfg.lambda_, 0.1)
        self.assertEqual(cfg.k, 10)
        self.assertEqual(cfg.outer_iters, 10)
        self.assertEqual(cfg.q_max_iters, 50)
        self.assertEqual(cfg.eps_pi, 1e-10)

    def test_lambda_alias(self):
        self.assertEqual(SolverConfig.build(**{"lambda": 0.5}).lambda_, 0.5)
        self.assertEqual(SolverConfig.build(lambda_=0.25).lambda_, 0.25)
        self.assertEqual(SolverConfig().with_updates(lambda_=2.0, beta=0.0).model_dump(by_alias=True)["lambda"], 2.0)

    def test_invalid_values(self):
        for bad in ({"beta": -1.0}, {"alpha": 0.0}, {"k": 0}, {"q_tol": 0.0}):
            with self.assertRaises(ConfigError):
                SolverConfig.build(**bad)


class TestLossAndGradient(unittest.TestCase):
    def setUp(self):
        self.ds = random_dataset(n=12, d=5, m=3, seed=0)
        self.gs = build_graphset(self.ds, 3)

    def test_initial_loss_has_no_reconstruction_error(self):
        cfg = SolverConfig.build(lambda_=0.0, beta=0.0)
        params = initial_params(self.ds)
        residual = self.ds.features - self.ds.attributes @ params.p
        self.assertAlmostEqual(loss(self.ds, self.gs, params, cfg), float(np.sum(residual ** 2)), places=10)

    def test_loss_shape_check(self):
        params = initial_params(self.ds)
        params.v = None
        with self.assertRaises(ShapeMismatchError):
            loss(self.ds, self.gs, params, SolverConfig())

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n, d = rng.integers(4, 15), rng.integers(2, 9)
            v = rng.standard_normal((n, d))
            v -= v.mean(axis=0)
            x = rng.standard_normal((n, d))
            q = random_orthogonal(rng, d)
            beta = rng.uniform(0.0, 1.0)
            analytic = q_gradient(v, q, x, beta, 1e-10)

            h = 1e-6
            numeric = np.zeros_like(q)
            for i in range(d):
                for j in range(d):
                    step = np.zeros_like(q)
                    step[i, j] = h
                    numeric[i, j] = (q_objective(v, q + step, x, beta, 1e-10)
                                     - q_objective(v, q - step, x, beta, 1e-10)) / (2 * h)
            err = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12)
            self.assertLessEqual(err, 1e-5)

    def test_gradient_shape_check(self):
        with self.assertRaises(ShapeMismatchError):
            q_gradient(np.ones((4, 3)), np.eye(2), np.ones((4, 2)), 0.1, 1e-10)


class TestSteps(unittest.TestCase):
    def setUp(self):
        self.ds = random_dataset(n=15, d=4, m=3, seed=2)
        self.gs = build_graphset(self.ds, 3)

    def test_v_step_stationarity(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            cfg = SolverConfig.build(lambda_=rng.uniform(0, 1), beta=rng.uniform(0, 0.5), alpha=rng.uniform(0.5, 2))
            params = initial_params(self.ds)
            params.q = random_orthogonal(rng, self.ds.n_features)
            left, right, rhs = assemble_v_system(self.ds, self.gs, params, cfg)
            v = np.linalg.solve(np.kron(np.eye(right.shape[0]), left) + np.kron(right.T, np.eye(left.shape[0])),
                                rhs.ravel(order="F")).reshape(rhs.shape, order="F")
            v_solved = v_step(self.ds, self.gs, params, cfg)
            # v_step re-centers; compare against the re-centered reference
            np.testing.assert_allclose(v_solved, v - v.mean(axis=0), atol=1e-7)
            residual = np.linalg.norm(v @ right + left @ v - rhs) / np.linalg.norm(rhs)
            self.assertLessEqual(residual, 1e-7)

    def test_large_beta_keeps_right_operand_definite(self):
        cfg = SolverConfig.build(beta=1e3, alpha=1.0)
        params = initial_params(self.ds)
        _, right, _ = assemble_v_system(self.ds, self.gs, params, cfg)
        floor = (1.0 - IMPLICIT_WEIGHT_SHARE) * 4.0
        self.assertGreaterEqual(np.linalg.eigvalsh(right).min(), floor - 1e-9)
        self.assertTrue(np.all(np.isfinite(v_step(self.ds, self.gs, params, cfg))))

    def test_linearized_weight_keeps_fixed_points(self):
        # both splittings of the diffusion weight leave the same residual at any V
        cfg = SolverConfig.build(beta=50.0)
        rng = np.random.default_rng(6)
        params = initial_params(self.ds)
        params.v = self.ds.features + 0.1 * rng.standard_normal(self.ds.features.shape)
        params.q = random_orthogonal(rng, self.ds.n_features)
        left, right, rhs = assemble_v_system(self.ds, self.gs, params, cfg)
        weights = cfg.beta * _e_diagonal(params.v, params.q, cfg.eps_pi)
        self.assertGreater(weights.max(), IMPLICIT_WEIGHT_SHARE * 4.0)
        full_right = 4.0 * np.eye(4) - (params.q * weights) @ params.q.T
        full_rhs = 2.0 * self.ds.features @ params.q.T + 2.0 * self.ds.attributes @ params.p
        np.testing.assert_allclose(
            params.v @ right + left @ params.v - rhs,
            params.v @ full_right + left @ params.v - full_rhs,
            atol=1e-9,
        )

    def test_fit_with_large_beta_stays_finite(self):
        result = fit(self.ds, self.gs, SolverConfig.build(beta=1e3, k=3, outer_iters=5, q_max_iters=10))
        self.assertTrue(np.all(np.isfinite(result.loss_trace)))
        self.assertLessEqual(orthogonality_error(result.params.q), 1e-8)

    def test_cayley_factor_is_orthogonal(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal((6, 6))
        h = cayley_factor(a - a.T, 0.3)
        self.assertLess(orthogonality_error(h), 1e-12)

    def test_q_step_decreases_objective(self):
        cfg = SolverConfig.build(beta=0.2, q_max_iters=30)
        rng = np.random.default_rng(5)
        v = self.ds.features + 0.1 * rng.standard_normal(self.ds.features.shape)
        v -= v.mean(axis=0)
        q0 = random_orthogonal(rng, self.ds.n_features)
        outcome = q_step(v, q0, self.ds.features, cfg)
        before = q_objective(v, q0, self.ds.features, cfg.beta / 2, cfg.eps_pi)
        after = q_objective(v, outcome.q, self.ds.features, cfg.beta / 2, cfg.eps_pi)
        self.assertLessEqual(after, before)
        self.assertLess(orthogonality_error(outcome.q), 1e-8)


class TestFit(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.ds, cls.unseen = load_small()
        cls.gs = build_graphset(cls.ds, 4)

    def test_orthogonality_and_trace(self):
        cfg = fast_config(outer_iters=5, early_stop_tol=0.0)
        result = fit(self.ds, self.gs, cfg)
        self.assertEqual(len(result.loss_trace), 6)
        self.assertEqual(result.iterations, 5)
        self.assertLessEqual(orthogonality_error(result.params.q), 1e-8)
        self.assertLessEqual(result.loss_trace[-1], result.loss_trace[0])
        self.assertEqual(result.params.p.shape, (self.ds.n_attributes, self.ds.n_features))
        np.testing.assert_allclose(result.params.v.mean(axis=0), 0.0, atol=1e-10)

    def test_zero_iterations(self):
        result = fit(self.ds, self.gs, fast_config(outer_iters=0))
        self.assertEqual(len(result.loss_trace), 1)
        np.testing.assert_array_equal(result.params.q, np.eye(self.ds.n_features))

    def test_deterministic(self):
        cfg = fast_config()
        a = fit(self.ds, self.gs, cfg)
        b = fit(self.ds, self.gs, cfg)
        np.testing.assert_array_equal(a.params.p, b.params.p)
        np.testing.assert_array_equal(a.params.q, b.params.q)
        self.assertEqual(a.loss_trace, b.loss_trace)

    def test_unregularized_fit_reduces_to_linear_regression(self):
        # with centered attributes V^T X stays symmetric, so Q stays I and P = lstsq(A, X)
        ds = random_dataset(n=12, d=4, m=3, seed=7)
        ds = replace(ds, attributes=ds.attributes - ds.attributes.mean(axis=0))
        gs = build_graphset(ds, 3)
        result = fit(ds, gs, SolverConfig.build(lambda_=0.0, beta=0.0, gamma=0.0, k=3, outer_iters=20))
        baseline = linear_regression_baseline(ds, ridge=0.0)
        np.testing.assert_allclose(
            seen_prototypes(ds, result.params).features, seen_prototypes(ds, baseline).features, atol=1e-6
        )

    def test_non_finite_input(self):
        features = self.ds.features.copy()
        features[0, 0] = np.nan
        with self.assertRaises(NonFiniteError):
            fit(replace(self.ds, features=features), self.gs, fast_config())


class TestDiffusionStats(unittest.TestCase):
    def test_equal_variances_give_zero_pi(self):
        v = np.array([[1.0, -1.0], [-1.0, 1.0]])
        stats = diffusion_stats(v, np.eye(2))
        np.testing.assert_allclose(stats.sigma, [1.0, 1.0])
        self.assertAlmostEqual(stats.pi_variance, 0.0)
        self.assertAlmostEqual(stats.gamma_total, 4.0)

    def test_pi_statistic_centers(self):
        x = np.array([[11.0, 0.0], [9.0, 0.0]])
        # standard deviations 1 and 0 -> variance of (1, 0) is 0.25, mean variance 0.5
        self.assertAlmostEqual(pi_statistic(x), 0.5)

    def test_pi_statistic_is_scale_free(self):
        x = np.random.default_rng(0).standard_normal((20, 5)) * np.array([3.0, 2.0, 1.0, 0.5, 0.1])
        self.assertAlmostEqual(pi_statistic(7.0 * x), pi_statistic(x), places=10)
        self.assertEqual(pi_statistic(np.ones((4, 3))), 0.0)

    def test_model_params_holds_optional_v(self):
        params = ModelParams(p=np.zeros((2, 3)), q=np.eye(3))
        self.assertIsNone(params.v)


if __name__ == "__main__":
    unittest.main()
