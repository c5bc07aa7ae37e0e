"""
Accuracy metrics and the JSON evaluation report.
"""

import json
import logging
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from uvds.exceptions import DatasetIOError, LengthMismatchError

logger = logging.getLogger(__name__)


class AccuracyResult(BaseModel):
    overall: float
    per_class: Dict[int, float]
    mean_class: float
    correct: int
    total: int


class EvaluationReport(BaseModel):
    """Everything an `eval`/`ablate`/`diag-variance` run reports."""

    overall_accuracy: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    per_class_accuracy: Dict[int, float] = Field(default_factory=dict)
    mean_class_accuracy: Optional[float] = None
    loss_trace: List[float] = Field(default_factory=list)
    variance_profile: Dict[str, List[float]] = Field(default_factory=dict)
    pi_statistic: Dict[str, float] = Field(default_factory=dict)
    config: Dict[str, Any] = Field(default_factory=dict)
    extra: Dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def from_accuracy(cls, acc: AccuracyResult, **kwargs) -> "EvaluationReport":
        return cls(
            overall_accuracy=acc.overall,
            per_class_accuracy=acc.per_class,
            mean_class_accuracy=acc.mean_class,
            **kwargs,
        )

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"

    def save(self, path: str) -> None:
        try:
            with open(path, "w", newline="\n") as f:
                f.write(self.to_json())
        except OSError as e:
            raise DatasetIOError(path, str(e))
        logger.info(f"Report written to {path}")


def accuracy(pred: Sequence[int], truth: Sequence[int]) -> AccuracyResult:
    """Overall, per-class (classes present in truth) and mean per-class accuracy."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if len(pred) != len(truth) or len(truth) == 0:
        raise LengthMismatchError(len(pred), len(truth))

    hits = pred == truth
    per_class = {int(c): float(np.mean(hits[truth == c])) for c in np.unique(truth)}
    correct = int(hits.sum())
    return AccuracyResult(
        overall=correct / len(truth),
        per_class=per_class,
        mean_class=float(np.mean(list(per_class.values()))),
        correct=correct,
        total=len(truth),
    )


def precision_at_k(ranked_labels: Sequence[int], target: int, k: int) -> float:
    """Fraction of the first k retrieved rows that carry the target label."""
    top = np.asarray(ranked_labels)[:k]
    if len(top) == 0:
        return 0.0
    return float(np.mean(top == target))
