"""
Command running the (lambda, beta) grid search on seen-class data.
"""

import logging
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from uvds.commands.common import solver_config, success
from uvds.cross_validation import DEFAULT_GRID, GridSpec, cross_validate
from uvds.dataset import load_dataset
from uvds.exceptions import ConfigError
from uvds.metrics import EvaluationReport
from uvds.settings import get_settings

logger = logging.getLogger(__name__)


class CrossValidateCommand:

    def execute(
        self,
        data: str,
        grid_lambda: Optional[List[float]] = None,
        grid_beta: Optional[List[float]] = None,
        repeats: Optional[int] = None,
        validation_fraction: float = 0.5,
        workers: Optional[int] = None,
        normalize_attributes: bool = False,
        report_out: Optional[str] = None,
        **kwargs,
    ) -> Dict[str, Any]:
        settings = get_settings()
        template = solver_config(**kwargs)
        try:
            grid = GridSpec(
                lambda_values=grid_lambda or list(DEFAULT_GRID),
                beta_values=grid_beta or list(DEFAULT_GRID),
                repeats=repeats or settings.cv_repeats,
                validation_fraction=validation_fraction,
                seed=template.seed,
            )
        except ValidationError as e:
            raise ConfigError(str(e))

        ds, _ = load_dataset(data, normalize_attributes=normalize_attributes)
        result = cross_validate(ds, grid, template, max_workers=workers or settings.max_workers)

        report = EvaluationReport(
            config=template.model_dump(by_alias=True),
            extra={"cross_validation": result.model_dump(mode="json", by_alias=True)},
        )
        if report_out:
            report.save(report_out)
        return success(
            report_out=report_out,
            best_lambda=result.best_lambda,
            best_beta=result.best_beta,
            best_score=result.best_score,
            cells=len(result.cells),
        )
