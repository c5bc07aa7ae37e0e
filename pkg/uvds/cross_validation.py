"""
Hyper-parameter search over (lambda, beta).

Each grid cell is scored by the mean NN accuracy of held-out seen rows
against prototypes synthesized from the training part, averaged over
repeated stratified hold-out splits. Only seen-class data is ever used.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from uvds.dataset import Dataset, split_validation
from uvds.exceptions import NumericalError
from uvds.graphs import GraphSet, build_graphset
from uvds.metrics import accuracy
from uvds.solver import SolverConfig, fit
from uvds.zsl import nn_classify, seen_prototypes

logger = logging.getLogger(__name__)

DEFAULT_GRID = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2]


class GridSpec(BaseModel):
    lambda_values: List[float] = Field(default_factory=lambda: list(DEFAULT_GRID))
    beta_values: List[float] = Field(default_factory=lambda: list(DEFAULT_GRID))
    validation_fraction: float = Field(default=0.5, gt=0.0, lt=1.0)
    repeats: int = Field(default=10, ge=1)
    seed: int = Field(default=0, ge=0)

    @field_validator("lambda_values", "beta_values")
    @classmethod
    def _non_empty(cls, values: List[float]) -> List[float]:
        if not values:
            raise ValueError("grid value lists must be non-empty")
        if any(v < 0 for v in values):
            raise ValueError("grid values must be non-negative")
        return values


class GridCell(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lambda_: float = Field(alias="lambda")
    beta: float
    score: Optional[float] = None
    fold_scores: List[float] = Field(default_factory=list)
    error: Optional[str] = None


class CVResult(BaseModel):
    best_lambda: Optional[float]
    best_beta: Optional[float]
    best_score: Optional[float]
    cells: List[GridCell]


def _score_fold(train: Dataset, val: Dataset, gs: GraphSet, cfg: SolverConfig) -> float:
    result = fit(train, gs, cfg)
    anchors = seen_prototypes(train, result.params)
    return accuracy(nn_classify(val.features, anchors), val.labels).overall


def _evaluate_cell(
    key: Tuple[float, float],
    folds: List[Tuple[Dataset, Dataset, GraphSet]],
    template: SolverConfig,
) -> GridCell:
    lam, beta = key
    cfg = template.with_updates(lambda_=lam, beta=beta)
    cell = GridCell(lambda_=lam, beta=beta)
    try:
        cell.fold_scores = [_score_fold(train, val, gs, cfg) for train, val, gs in folds]
        cell.score = float(np.mean(cell.fold_scores))
    except NumericalError as e:
        logger.warning(f"Grid cell lambda={lam} beta={beta} failed: {e.message}")
        cell.error = e.error_type
    return cell


def select_best(cells: List[GridCell]) -> Optional[GridCell]:
    """Highest score; ties go to the smaller lambda, then the smaller beta."""
    scored = [c for c in cells if c.score is not None]
    if not scored:
        return None
    return sorted(scored, key=lambda c: (-c.score, c.lambda_, c.beta))[0]


def cross_validate(
    ds: Dataset,
    grid: GridSpec,
    template: SolverConfig,
    max_workers: int = 1,
) -> CVResult:
    folds = []
    for r in range(grid.repeats):
        train, val = split_validation(ds, grid.validation_fraction, grid.seed + r)
        folds.append((train, val, build_graphset(train, template.k)))

    keys = sorted({(float(l), float(b)) for l in grid.lambda_values for b in grid.beta_values})
    logger.info(f"Cross-validating {len(keys)} grid cells over {grid.repeats} hold-out splits")

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results: Dict[Tuple[float, float], GridCell] = dict(
                zip(keys, pool.map(lambda k: _evaluate_cell(k, folds, template), keys))
            )
    else:
        results = {k: _evaluate_cell(k, folds, template) for k in keys}

    cells = [results[k] for k in keys]
    best = select_best(cells)
    if best is None:
        logger.warning("Every grid cell failed")
    else:
        logger.info(f"Best cell: lambda={best.lambda_} beta={best.beta} score={best.score:.4f}")
    return CVResult(
        best_lambda=None if best is None else best.lambda_,
        best_beta=None if best is None else best.beta,
        best_score=None if best is None else best.score,
        cells=cells,
    )
