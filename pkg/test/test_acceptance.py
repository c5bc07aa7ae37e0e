"""
End-to-end checks on the default synthetic benchmark.

These run full-size fits (T = 10) and take longer than the unit tests.
"""

import os
import unittest

from fixtures import TempDirMixin, load_synthetic
from uvds.ablation import run_ablation
from uvds.commands.diag_variance import DiagVarianceCommand
from uvds.cross_validation import GridSpec, cross_validate
from uvds.graphs import build_graphset
from uvds.kernels import orthogonality_error
from uvds.metrics import accuracy
from uvds.solver import SolverConfig, fit
from uvds.synthetic import gen_synthetic
from uvds.zsl import PrototypeMode, linear_regression_baseline, nn_classify, prototype_modes

SEEDS = range(10)


def unseen_nn_accuracy(unseen, params) -> float:
    anchors = prototype_modes(unseen, params, PrototypeMode.CA)
    return accuracy(nn_classify(unseen.true_features, anchors), unseen.labels).overall


class TestDefaultBenchmark(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.ds, cls.unseen = load_synthetic()
        cls.gs = build_graphset(cls.ds, SolverConfig().k)

    def test_q_stays_orthogonal_after_full_fit(self):
        result = fit(self.ds, self.gs, SolverConfig.build(early_stop_tol=0.0))
        self.assertEqual(result.iterations, 10)
        self.assertLessEqual(orthogonality_error(result.params.q), 1e-8)

    def test_cv_selected_model_keeps_up_with_linear_regression(self):
        floor = unseen_nn_accuracy(self.unseen, linear_regression_baseline(self.ds))
        grid = GridSpec(lambda_values=[0.01, 0.1, 1.0], beta_values=[0.01, 0.1, 1.0], repeats=2)
        cv = cross_validate(self.ds, grid, SolverConfig())
        self.assertIsNotNone(cv.best_score)

        cfg = SolverConfig.build(lambda_=cv.best_lambda, beta=cv.best_beta)
        result = fit(self.ds, self.gs, cfg)
        score = unseen_nn_accuracy(self.unseen, result.params)
        self.assertGreaterEqual(score, floor - 0.02)
        self.assertGreaterEqual(score, 0.90)


class TestConvergence(unittest.TestCase):
    def test_loss_decreases_and_stops_early(self):
        stopped = 0
        for seed in SEEDS:
            ds, _ = load_synthetic(seed=seed)
            cfg = SolverConfig.build(seed=seed)
            result = fit(ds, build_graphset(ds, cfg.k), cfg)
            self.assertLessEqual(result.loss_trace[-1], result.loss_trace[0], msg=f"seed {seed}")
            stopped += int(result.converged)
        self.assertGreaterEqual(stopped, 8)


class TestDiffusionEffect(TempDirMixin, unittest.TestCase):
    def test_diffusion_flattens_the_synthesized_spectrum(self):
        data = self.path("data")
        gen_synthetic(data)
        csv_out = self.path("variance.csv")
        status = DiagVarianceCommand().execute(data=data, csv_out=csv_out)

        self.assertTrue(os.path.exists(csv_out))
        pis = status["pi_statistic"]
        self.assertLess(pis["with_dr"], pis["without_dr"])
        shares = status["top_share"]
        self.assertGreaterEqual(shares["without_dr"], 2.0 * shares["with_dr"])


class TestAblationOrdering(unittest.TestCase):
    def test_full_model_is_never_behind_its_parts(self):
        ahead = 0
        for seed in SEEDS:
            ds, unseen = load_synthetic(seed=seed)
            report = run_ablation(ds, unseen, SolverConfig.build(seed=seed), svm_iters=50)
            full = report.accuracy_of("full", "ca", "nn")
            if full >= report.accuracy_of("gr_only", "ca", "nn") and full >= report.accuracy_of("dr_only", "ca", "nn"):
                ahead += 1
        self.assertGreaterEqual(ahead, 8)


if __name__ == "__main__":
    unittest.main()
