"""
Feature synthesis for unseen classes and recognition on top of it.

Synthesized features live in the centered feature space, so they can be
compared directly with real features centered by the seen mean.
"""

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Protocol, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from uvds.dataset import AttributeLevel, Dataset, UnseenSet, class_means
from uvds.exceptions import (
    ConfigError,
    DatasetIOError,
    EmptyAnchorsError,
    LengthMismatchError,
    ShapeMismatchError,
    SingleClassError,
)
from uvds.kernels import Matrix, Vector, as_matrix, lstsq
from uvds.solver import ModelParams

logger = logging.getLogger(__name__)

DEFAULT_BASELINE_RIDGE = 1e-3
DEFAULT_SVM_C = 1.0
DEFAULT_SVM_ITERS = 500


class Projection(Protocol):
    p: Matrix
    q: Matrix


class SynthesisMode(str, Enum):
    PROTOTYPE = "prototype"
    SAMPLE = "sample"


class PrototypeMode(str, Enum):
    CA = "ca"  # synthesize from class-mean attributes
    MF = "mf"  # mean of per-instance synthesized features


@dataclass(frozen=True)
class SynthesizedSet:
    features: Matrix
    labels: np.ndarray
    mode: SynthesisMode


@dataclass(frozen=True)
class LinearSvmModel:
    """One-vs-rest linear SVM; row c of `weights` scores class `classes[c]`."""

    weights: Matrix
    biases: Vector
    classes: np.ndarray
    reg_c: float
    iterations: int


def synthesize(attrs: Matrix, params: Projection) -> Matrix:
    """X = A P Q"""
    attrs = as_matrix(attrs, "synthesize")
    if attrs.shape[1] != params.p.shape[0]:
        raise ShapeMismatchError("synthesize", f"{params.p.shape[0]} attribute columns", attrs.shape)
    return (attrs @ params.p) @ params.q


def linear_regression_baseline(ds: Dataset, ridge: float = DEFAULT_BASELINE_RIDGE) -> ModelParams:
    """Ridge regression from attributes to features, min ||A P - X||^2 + ridge ||P||^2, with Q = I."""
    p = lstsq(ds.attributes, ds.features, ridge=ridge)
    return ModelParams(p=p, q=np.eye(ds.n_features))


def _sorted_by_label(anchors: SynthesizedSet):
    order = np.argsort(anchors.labels, kind="stable")
    return anchors.features[order], anchors.labels[order]


def nn_classify(queries: Matrix, anchors: SynthesizedSet) -> np.ndarray:
    """Label of the nearest anchor (Euclidean); ties go to the lowest label."""
    if anchors.features.shape[0] == 0:
        raise EmptyAnchorsError()
    queries = as_matrix(queries, "nn_classify")
    if queries.shape[1] != anchors.features.shape[1]:
        raise ShapeMismatchError("nn_classify", f"{anchors.features.shape[1]} columns", queries.shape)
    features, labels = _sorted_by_label(anchors)
    dist = cdist(queries, features, metric="sqeuclidean")
    return labels[np.argmin(dist, axis=1)]


def _train_one_vs_rest(features: Matrix, y: Vector, reg_c: float, iters: int) -> Tuple[Vector, float]:
    n, d = features.shape
    w = np.zeros(d)
    b = 0.0
    for t in range(1, iters + 1):
        active = np.where(y * (features @ w + b) < 1.0, y, 0.0)
        step = 1.0 / (reg_c * t)
        w = w - step * (reg_c * w - (active @ features) / n)
        b += step * active.sum() / n
    return w, b


def svm_train(
    features: Matrix,
    labels: np.ndarray,
    reg_c: float = DEFAULT_SVM_C,
    iters: int = DEFAULT_SVM_ITERS,
    seed: int = 0,
    max_workers: int = 1,
) -> LinearSvmModel:
    """
    One-vs-rest linear SVMs, each trained by full-batch subgradient descent on

        reg_c/2 ||w_c||^2 + mean_i max(0, 1 - y_ic (w_c^T x_i + b_c))

    with step 1/(reg_c * t). The bias is not regularized. Full-batch steps
    make the result independent of `seed`, which is kept for the record.
    With max_workers > 1 the classes are trained on a thread pool; results
    are merged in class order, so they do not depend on the pool.
    """
    features = as_matrix(features, "svm_train")
    labels = np.asarray(labels)
    if labels.shape[0] != features.shape[0]:
        raise LengthMismatchError(labels.shape[0], features.shape[0])
    classes = np.unique(labels)
    if len(classes) < 2:
        raise SingleClassError(len(classes))

    targets = [np.where(labels == c, 1.0, -1.0) for c in classes]
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            fitted = list(pool.map(lambda y: _train_one_vs_rest(features, y, reg_c, iters), targets))
    else:
        fitted = [_train_one_vs_rest(features, y, reg_c, iters) for y in targets]

    logger.debug(f"SVM trained on {features.shape[0]} rows, {len(classes)} classes (seed={seed})")
    return LinearSvmModel(
        weights=np.vstack([w for w, _ in fitted]),
        biases=np.array([b for _, b in fitted]),
        classes=classes,
        reg_c=reg_c,
        iterations=iters,
    )



def svm_scores(model: LinearSvmModel, queries: Matrix) -> Matrix:
    queries = as_matrix(queries, "svm_predict")
    if queries.shape[1] != model.weights.shape[1]:
        raise ShapeMismatchError("svm_predict", f"{model.weights.shape[1]} columns", queries.shape)
    return queries @ model.weights.T + model.biases


def svm_predict(model: LinearSvmModel, queries: Matrix) -> np.ndarray:
    """Argmax of w_c^T x + b_c; ties go to the lowest label."""
    return model.classes[np.argmax(svm_scores(model, queries), axis=1)]


def sample_set(unseen: UnseenSet, params: Projection) -> SynthesizedSet:
    """One synthesized feature per unseen instance."""
    return SynthesizedSet(
        features=synthesize(unseen.attributes, params),
        labels=unseen.labels.copy(),
        mode=SynthesisMode.SAMPLE,
    )


def prototype_modes(
    unseen: UnseenSet,
    params: Projection,
    mode: PrototypeMode,
    attribute_level: AttributeLevel = AttributeLevel.IMAGE,
) -> SynthesizedSet:
    """
    One prototype per unseen class: CA synthesizes from class-mean
    attributes, MF averages the per-instance synthesized features. With
    class-level attributes MF is the same as CA.
    """
    mode = PrototypeMode(mode)
    if mode == PrototypeMode.MF and attribute_level == AttributeLevel.CLASS:
        logger.info("MF prototypes requested on class-level attributes; using CA")
        mode = PrototypeMode.CA

    if mode == PrototypeMode.CA:
        attrs, ids = class_means(unseen.attributes, unseen.labels)
        features = synthesize(attrs, params)
    else:
        features, ids = class_means(synthesize(unseen.attributes, params), unseen.labels)
    return SynthesizedSet(features=features, labels=ids, mode=SynthesisMode.PROTOTYPE)


def seen_prototypes(ds: Dataset, params: Projection) -> SynthesizedSet:
    """CA prototypes for the seen classes, used to score held-out seen rows."""
    attrs, ids = class_means(ds.attributes, ds.labels)
    return SynthesizedSet(features=synthesize(attrs, params), labels=ids, mode=SynthesisMode.PROTOTYPE)


def retrieve(prototype: Vector, features: Matrix, top_k: Optional[int] = None) -> np.ndarray:
    """Row indices of `features` ranked by distance to `prototype` (stable on ties)."""
    features = as_matrix(features, "retrieve")
    prototype = np.asarray(prototype, dtype=np.float64).reshape(1, -1)
    if prototype.shape[1] != features.shape[1]:
        raise ShapeMismatchError("retrieve", f"{features.shape[1]} values", prototype.shape)
    order = np.argsort(cdist(prototype, features, metric="sqeuclidean")[0], kind="stable")
    return order if top_k is None else order[:top_k]


def write_predictions(
    path: str,
    predicted: np.ndarray,
    truth: np.ndarray,
    row_index: Optional[np.ndarray] = None,
) -> None:
    """One CSV row per query, keyed by its row in the source files (its position when unknown)."""
    if len(predicted) != len(truth):
        raise LengthMismatchError(len(predicted), len(truth))
    rows = np.arange(len(predicted)) if row_index is None else np.asarray(row_index)
    if len(rows) != len(predicted):
        raise LengthMismatchError(len(rows), len(predicted))
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["row_index", "predicted_label", "true_label"])
            for r, p, t in zip(rows, predicted, truth):
                writer.writerow([int(r), int(p), int(t)])
    except OSError as e:
        raise DatasetIOError(path, str(e))


def build_anchors(
    target: UnseenSet,
    params: Projection,
    scenario: str,
    attribute_level: AttributeLevel = AttributeLevel.IMAGE,
) -> SynthesizedSet:
    """Anchors for one recognition scenario: "ca" / "mf" prototypes or "sample" instances."""
    if scenario == SynthesisMode.SAMPLE.value:
        return sample_set(target, params)
    return prototype_modes(target, params, PrototypeMode(scenario), attribute_level)


def recognize(
    queries: Matrix,
    anchors: SynthesizedSet,
    classifier: str = "nn",
    svm_c: float = DEFAULT_SVM_C,
    svm_iters: int = DEFAULT_SVM_ITERS,
    seed: int = 0,
    max_workers: int = 1,
) -> np.ndarray:
    if classifier == "nn":
        return nn_classify(queries, anchors)
    if classifier != "svm":
        raise ConfigError(f"unknown classifier {classifier!r}", {"allowed": ["nn", "svm"]})
    model = svm_train(anchors.features, anchors.labels, reg_c=svm_c, iters=svm_iters, seed=seed,
                      max_workers=max_workers)
    return svm_predict(model, queries)
