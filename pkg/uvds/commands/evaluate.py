"""
Command evaluating a trained model on the unseen classes of a dataset.
"""

import logging
from dataclasses import replace
from typing import Any, Dict, Optional

import numpy as np

from uvds.commands.common import success
from uvds.dataset import UnseenSet, load_dataset
from uvds.metrics import EvaluationReport, accuracy, precision_at_k
from uvds.model_io import TrainedModel, load_model
from uvds.settings import get_settings
from uvds.solver import pi_statistic
from uvds.zsl import (
    DEFAULT_SVM_C,
    DEFAULT_SVM_ITERS,
    PrototypeMode,
    build_anchors,
    prototype_modes,
    recognize,
    retrieve,
    sample_set,
    write_predictions,
)

logger = logging.getLogger(__name__)

DEFAULT_RETRIEVAL_K = 10


def align_unseen(unseen: UnseenSet, data_mean: np.ndarray, trained: TrainedModel) -> UnseenSet:
    """Move unseen rows into the model's centered and (optionally) normalized space."""
    attributes = unseen.attributes
    if trained.attribute_scaler is not None:
        attributes = trained.attribute_scaler.transform(attributes)
    features = unseen.true_features + data_mean - trained.feature_mean
    return replace(unseen, attributes=attributes, true_features=features)


def retrieval_precision(unseen: UnseenSet, trained: TrainedModel, top_k: int) -> Dict[str, Any]:
    """Mean precision@k of ranking real unseen rows by distance to each CA prototype."""
    prototypes = prototype_modes(unseen, trained, PrototypeMode.CA)
    scores = {}
    for feature, label in zip(prototypes.features, prototypes.labels):
        ranked = unseen.labels[retrieve(feature, unseen.true_features, top_k)]
        scores[int(label)] = precision_at_k(ranked, int(label), top_k)
    return {"k": top_k, "mean_precision": float(np.mean(list(scores.values())))}


class EvaluateCommand:
    """Synthesize anchors for the unseen classes and classify the real unseen rows."""

    def execute(
        self,
        model: str,
        data: str,
        classifier: str = "nn",
        mode: str = "ca",
        report_out: Optional[str] = None,
        predictions_out: Optional[str] = None,
        svm_c: float = DEFAULT_SVM_C,
        svm_iters: int = DEFAULT_SVM_ITERS,
        retrieval_k: int = DEFAULT_RETRIEVAL_K,
        **kwargs,
    ) -> Dict[str, Any]:
        trained = load_model(model)
        ds, unseen = load_dataset(data)
        unseen = align_unseen(unseen, ds.feature_mean, trained)

        anchors = build_anchors(unseen, trained, mode, ds.attribute_level)
        predicted = recognize(unseen.true_features, anchors, classifier, svm_c, svm_iters, trained.config.seed,
                              max_workers=get_settings().max_workers)
        predicted_ids = unseen.class_ids[predicted - 1]
        true_ids = unseen.class_ids[unseen.labels - 1]
        acc = accuracy(predicted_ids, true_ids)
        logger.info(f"Unseen accuracy ({mode}/{classifier}): {acc.overall:.4f} ({acc.correct}/{acc.total})")

        if predictions_out:
            write_predictions(predictions_out, predicted_ids, true_ids, unseen.row_index)

        report = EvaluationReport.from_accuracy(
            acc,
            pi_statistic={
                "real": pi_statistic(unseen.true_features),
                "synthesized": pi_statistic(sample_set(unseen, trained).features),
            },
            config=trained.config.model_dump(by_alias=True),
            extra={
                "classifier": classifier,
                "mode": mode,
                "retrieval": retrieval_precision(unseen, trained, min(retrieval_k, unseen.n_samples)),
            },
        )
        if report_out:
            report.save(report_out)
        return success(report_out=report_out, **report.model_dump(mode="json"))
