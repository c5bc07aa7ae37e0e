import os
import unittest
from dataclasses import replace

import numpy as np

from fixtures import TempDirMixin, load_small, random_dataset, toy_unseen
from uvds.dataset import AttributeLevel
from uvds.exceptions import (
    ConfigError,
    EmptyAnchorsError,
    LengthMismatchError,
    ShapeMismatchError,
    SingleClassError,
)
from uvds.solver import ModelParams
from uvds.zsl import (
    PrototypeMode,
    SynthesisMode,
    SynthesizedSet,
    build_anchors,
    linear_regression_baseline,
    nn_classify,
    prototype_modes,
    recognize,
    retrieve,
    sample_set,
    seen_prototypes,
    svm_predict,
    svm_scores,
    svm_train,
    synthesize,
    write_predictions,
)


def identity_params(m: int) -> ModelParams:
    return ModelParams(p=np.eye(m), q=np.eye(m))


class TestSynthesize(unittest.TestCase):
    def test_linear_map(self):
        params = ModelParams(p=np.array([[1.0, 2.0]]), q=np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(synthesize(np.array([[3.0]]), params), [[6.0, 3.0]])

    def test_attribute_width_checked(self):
        with self.assertRaises(ShapeMismatchError):
            synthesize(np.ones((2, 3)), identity_params(2))

    def test_baseline_recovers_linear_map(self):
        ds = random_dataset(n=30, d=4, m=3, seed=1)
        g = np.arange(12.0).reshape(3, 4) / 10.0
        ds = replace(ds, features=ds.attributes @ g)
        params = linear_regression_baseline(ds, ridge=1e-12)
        np.testing.assert_allclose(params.p, g, atol=1e-8)
        np.testing.assert_array_equal(params.q, np.eye(4))


class TestNearestNeighbour(unittest.TestCase):
    def test_classifies_nearest(self):
        anchors = SynthesizedSet(np.array([[0.0, 0.0], [10.0, 0.0]]), np.array([3, 5]), SynthesisMode.PROTOTYPE)
        pred = nn_classify(np.array([[1.0, 1.0], [9.0, -1.0]]), anchors)
        np.testing.assert_array_equal(pred, [3, 5])

    def test_ties_go_to_lowest_label(self):
        anchors = SynthesizedSet(np.array([[1.0], [-1.0]]), np.array([4, 2]), SynthesisMode.PROTOTYPE)
        np.testing.assert_array_equal(nn_classify(np.array([[0.0]]), anchors), [2])

    def test_translation_invariant(self):
        rng = np.random.default_rng(1)
        anchors = rng.integers(-10, 10, size=(5, 3)).astype(float)
        queries = rng.integers(-10, 10, size=(30, 3)).astype(float)
        labels = np.array([4, 1, 5, 2, 3])
        shift = np.array([500.0, -250.0, 1000.0])
        plain = nn_classify(queries, SynthesizedSet(anchors, labels, SynthesisMode.PROTOTYPE))
        moved = nn_classify(queries + shift, SynthesizedSet(anchors + shift, labels, SynthesisMode.PROTOTYPE))
        np.testing.assert_array_equal(moved, plain)

    def test_empty_anchors(self):
        anchors = SynthesizedSet(np.zeros((0, 2)), np.zeros(0, dtype=int), SynthesisMode.PROTOTYPE)
        with self.assertRaises(EmptyAnchorsError):
            nn_classify(np.ones((1, 2)), anchors)

    def test_dimension_mismatch(self):
        anchors = SynthesizedSet(np.zeros((1, 2)), np.array([1]), SynthesisMode.PROTOTYPE)
        with self.assertRaises(ShapeMismatchError):
            nn_classify(np.ones((1, 3)), anchors)


class TestSvm(unittest.TestCase):
    def test_separable_classes(self):
        rng = np.random.default_rng(2)
        centers = np.array([[5.0, 0.0], [0.0, 5.0], [-5.0, -5.0]])
        labels = np.repeat([1, 2, 3], 20)
        features = centers[labels - 1] + 0.3 * rng.standard_normal((60, 2))
        model = svm_train(features, labels)
        np.testing.assert_array_equal(svm_predict(model, features), labels)
        self.assertEqual(svm_scores(model, features).shape, (60, 3))

    def test_single_class(self):
        with self.assertRaises(SingleClassError):
            svm_train(np.ones((3, 2)), np.array([1, 1, 1]))

    def test_length_mismatch(self):
        with self.assertRaises(LengthMismatchError):
            svm_train(np.ones((3, 2)), np.array([1, 2]))

    def test_independent_of_seed(self):
        features = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 0.0]])
        labels = np.array([1, 2, 2, 1])
        a = svm_train(features, labels, seed=0, iters=50)
        b = svm_train(features, labels, seed=9, iters=50)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_class_pool_matches_serial(self):
        rng = np.random.default_rng(4)
        labels = np.repeat([1, 2, 3, 4], 10)
        features = rng.standard_normal((40, 5)) + labels[:, None]
        serial = svm_train(features, labels, iters=80)
        pooled = svm_train(features, labels, iters=80, max_workers=3)
        np.testing.assert_array_equal(serial.weights, pooled.weights)
        np.testing.assert_array_equal(serial.biases, pooled.biases)
        np.testing.assert_array_equal(serial.classes, pooled.classes)


class TestPrototypes(unittest.TestCase):
    def test_ca_and_mf(self):
        unseen = toy_unseen()
        params = identity_params(2)
        ca = prototype_modes(unseen, params, PrototypeMode.CA)
        mf = prototype_modes(unseen, params, PrototypeMode.MF)
        np.testing.assert_allclose(ca.features, [[1.0, 0.0], [0.0, 1.0]])
        np.testing.assert_allclose(ca.features, mf.features)
        np.testing.assert_array_equal(ca.labels, [1, 2])
        self.assertEqual(ca.mode, SynthesisMode.PROTOTYPE)

    def test_mf_on_class_level_attributes_is_ca(self):
        unseen = toy_unseen()
        params = ModelParams(p=np.array([[1.0, 2.0], [3.0, 4.0]]), q=np.eye(2))
        with self.assertLogs("uvds.zsl", level="INFO"):
            mf = prototype_modes(unseen, params, "mf", AttributeLevel.CLASS)
        ca = prototype_modes(unseen, params, "ca", AttributeLevel.CLASS)
        np.testing.assert_allclose(mf.features, ca.features)

    def test_sample_set(self):
        synthesized = sample_set(toy_unseen(), identity_params(2))
        self.assertEqual(synthesized.features.shape, (4, 2))
        self.assertEqual(synthesized.mode, SynthesisMode.SAMPLE)

    def test_build_anchors_modes(self):
        unseen = toy_unseen()
        self.assertEqual(build_anchors(unseen, identity_params(2), "sample").features.shape[0], 4)
        self.assertEqual(build_anchors(unseen, identity_params(2), "ca").features.shape[0], 2)

    def test_seen_prototypes(self):
        ds = random_dataset(n=9, d=3, m=3, n_classes=3, seed=3)
        anchors = seen_prototypes(ds, identity_params(3))
        np.testing.assert_array_equal(anchors.labels, [1, 2, 3])


class TestRecognize(unittest.TestCase):
    def test_unknown_classifier(self):
        anchors = sample_set(toy_unseen(), identity_params(2))
        with self.assertRaises(ConfigError):
            recognize(np.ones((1, 2)), anchors, "forest")

    def test_recovers_unseen_labels_on_small_corpus(self):
        ds, unseen = load_small()
        params = linear_regression_baseline(ds)
        for scenario in ("ca", "mf", "sample"):
            anchors = build_anchors(unseen, params, scenario, ds.attribute_level)
            pred = recognize(unseen.true_features, anchors, "nn")
            self.assertGreaterEqual(np.mean(pred == unseen.labels), 0.9)


class TestRetrieval(TempDirMixin, unittest.TestCase):
    def test_ranked_by_distance(self):
        features = np.array([[5.0], [1.0], [0.0], [1.0]])
        np.testing.assert_array_equal(retrieve(np.array([0.0]), features), [2, 1, 3, 0])
        np.testing.assert_array_equal(retrieve(np.array([0.0]), features, top_k=2), [2, 1])

    def test_write_predictions(self):
        path = self.path("pred.csv")
        write_predictions(path, np.array([1, 2]), np.array([1, 1]))
        with open(path) as f:
            self.assertEqual(f.read(), "row_index,predicted_label,true_label\n0,1,1\n1,2,1\n")
        self.assertTrue(os.path.exists(path))

    def test_write_predictions_uses_source_rows(self):
        path = self.path("pred.csv")
        write_predictions(path, np.array([1, 2]), np.array([1, 1]), row_index=np.array([40, 17]))
        with open(path) as f:
            self.assertEqual(f.read(), "row_index,predicted_label,true_label\n40,1,1\n17,2,1\n")
        with self.assertRaises(LengthMismatchError):
            write_predictions(path, np.array([1, 2]), np.array([1, 1]), row_index=np.array([3]))


if __name__ == "__main__":
    unittest.main()
