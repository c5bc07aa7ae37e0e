"""
Command synthesizing feature rows for an attribute CSV.
"""

import logging
from typing import Any, Dict

import numpy as np

from uvds.commands.common import success, write_matrix
from uvds.dataset import ATTRIBUTES_FILE
from uvds.exceptions import DatasetIOError
from uvds.kernels import as_matrix
from uvds.model_io import load_model
from uvds.zsl import synthesize

logger = logging.getLogger(__name__)


class SynthCommand:
    """
    Read raw attribute rows, apply the model's attribute scaling if it has
    one, and write X = A P Q. The training feature mean is added back unless
    `centered` is set, so rows are comparable with the source feature file.
    """

    def execute(self, model: str, attributes: str, out: str, centered: bool = False, **kwargs) -> Dict[str, Any]:
        trained = load_model(model)
        try:
            attrs = np.loadtxt(attributes, delimiter=",", ndmin=2, dtype=np.float64)
        except (OSError, ValueError) as e:
            raise DatasetIOError(attributes or ATTRIBUTES_FILE, str(e))
        attrs = as_matrix(attrs, "synth")
        if trained.attribute_scaler is not None:
            attrs = trained.attribute_scaler.transform(attrs)

        features = synthesize(attrs, trained)
        if not centered:
            features = features + trained.feature_mean
        write_matrix(out, features)
        logger.info(f"Synthesized {features.shape[0]} rows of dimension {features.shape[1]} into {out}")
        return success(out=out, rows=int(features.shape[0]), dims=int(features.shape[1]), centered=centered)
