"""
Command fitting the embedding on the seen side of a dataset directory.
"""

import logging
import time
from typing import Any, Dict, Optional

from uvds.commands.common import solver_config, success
from uvds.dataset import load_dataset
from uvds.graphs import build_graphset, dump_graph
from uvds.kernels import orthogonality_error
from uvds.model_io import TrainedModel, save_model
from uvds.solver import fit

logger = logging.getLogger(__name__)


class TrainCommand:
    """Load, build graphs, fit (P, Q) and write the model file."""

    def execute(
        self,
        data: str,
        model_out: str,
        normalize_attributes: bool = False,
        dump_graph_path: Optional[str] = None,
        **kwargs,
    ) -> Dict[str, Any]:
        cfg = solver_config(**kwargs)
        ds, _ = load_dataset(data, normalize_attributes=normalize_attributes)
        gs = build_graphset(ds, cfg.k)
        if dump_graph_path:
            dump_graph(dump_graph_path, gs.w_mean)

        started = time.perf_counter()
        result = fit(ds, gs, cfg)
        logger.info(f"Training finished in {time.perf_counter() - started:.2f}s")

        save_model(model_out, TrainedModel(
            p=result.params.p,
            q=result.params.q,
            feature_mean=ds.feature_mean,
            config=cfg,
            n_samples=ds.n_samples,
            attribute_scaler=ds.attribute_scaler,
        ))
        return success(
            model_out=model_out,
            iterations=result.iterations,
            converged=result.converged,
            line_search_failures=result.line_search_failures,
            loss_trace=result.loss_trace,
            orthogonality_error=orthogonality_error(result.params.q),
        )
