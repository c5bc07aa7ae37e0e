"""
Command running the regularizer ablation and writing its report.
"""

import logging
from typing import Any, Dict, Optional

from uvds.ablation import run_ablation
from uvds.commands.common import solver_config, success
from uvds.dataset import load_dataset
from uvds.metrics import EvaluationReport
from uvds.zsl import DEFAULT_BASELINE_RIDGE, DEFAULT_SVM_C, DEFAULT_SVM_ITERS

logger = logging.getLogger(__name__)


class AblateCommand:
    """Linear Regression / GR-only / DR-only / full, over CA, MF and sample anchors with NN and SVM."""

    def execute(
        self,
        data: str,
        validation_fraction: float = 0.5,
        normalize_attributes: bool = False,
        baseline_ridge: float = DEFAULT_BASELINE_RIDGE,
        svm_c: float = DEFAULT_SVM_C,
        svm_iters: int = DEFAULT_SVM_ITERS,
        report_out: Optional[str] = None,
        **kwargs,
    ) -> Dict[str, Any]:
        cfg = solver_config(**kwargs)
        ds, unseen = load_dataset(data, normalize_attributes=normalize_attributes)
        ablation = run_ablation(
            ds, unseen, cfg,
            validation_fraction=validation_fraction,
            baseline_ridge=baseline_ridge,
            svm_c=svm_c,
            svm_iters=svm_iters,
        )

        report = EvaluationReport(
            loss_trace=ablation.loss_traces["full"],
            pi_statistic=ablation.pi_statistic,
            config=ablation.config,
            extra={
                "cells": [cell.model_dump() for cell in ablation.cells],
                "loss_traces": ablation.loss_traces,
            },
        )
        if report_out:
            report.save(report_out)

        summary = {
            method: ablation.accuracy_of(method, "ca", "nn")
            for method in ablation.pi_statistic
        }
        return success(report_out=report_out, cells=len(ablation.cells), unseen_nn_ca=summary)
