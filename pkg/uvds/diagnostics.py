"""
Variance-decay diagnostic: per-dimension variances of real and synthesized
features, normalized by their maximum and sorted in descending order.
"""

import csv
import logging
import math
from typing import List

import numpy as np
from pydantic import BaseModel

from uvds.exceptions import DatasetIOError, ShapeMismatchError
from uvds.kernels import Matrix, as_matrix, center_columns
from uvds.solver import pi_statistic

logger = logging.getLogger(__name__)

# diagnostic beta = 2 * spread * largest seen column norm
DIAGNOSTIC_BETA_SPREAD = 10.0


class VarianceProfile(BaseModel):
    real: List[float]
    with_dr: List[float]
    without_dr: List[float]
    pi_real: float
    pi_with_dr: float
    pi_without_dr: float

    def top_share(self, source: str, fraction: float = 0.1) -> float:
        return top_fraction_share(getattr(self, source), fraction)

    def write_csv(self, path: str) -> None:
        try:
            with open(path, "w", newline="") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(["dim", "real", "with_dr", "without_dr"])
                for d, row in enumerate(zip(self.real, self.with_dr, self.without_dr)):
                    writer.writerow([d] + [repr(float(x)) for x in row])
        except OSError as e:
            raise DatasetIOError(path, str(e))


def diagnostic_beta(features: Matrix, spread: float = DIAGNOSTIC_BETA_SPREAD) -> float:
    """
    Diffusion weight large enough to dominate every feature dimension:
    2 * spread * the largest column norm of the seen features. At this scale
    the fitted per-dimension norms differ by a factor of at most 1 + 1/spread.
    """
    features = as_matrix(features, "diagnostic_beta")
    centered, _ = center_columns(features)
    return 2.0 * spread * float(np.max(np.linalg.norm(centered, axis=0)))


def normalized_variances(x: Matrix) -> List[float]:
    """Column variances divided by their maximum, sorted descending (all zero for constant data)."""
    centered, _ = center_columns(x)
    var = np.sort(np.mean(centered * centered, axis=0))[::-1]
    top = var[0] if var.size else 0.0
    if top <= 0.0:
        return [0.0] * len(var)
    return (var / top).tolist()


def top_fraction_share(profile: List[float], fraction: float = 0.1) -> float:
    """Share of the total variance held by the top ceil(fraction * D) dimensions."""
    values = np.asarray(profile, dtype=np.float64)
    total = values.sum()
    if total <= 0.0:
        return 0.0
    n_top = max(1, math.ceil(fraction * len(values)))
    return float(values[:n_top].sum() / total)


def variance_diagnostic(real_x: Matrix, synth_with_dr: Matrix, synth_without_dr: Matrix) -> VarianceProfile:
    real_x = as_matrix(real_x, "variance_diagnostic")
    synth_with_dr = as_matrix(synth_with_dr, "variance_diagnostic")
    synth_without_dr = as_matrix(synth_without_dr, "variance_diagnostic")
    d = real_x.shape[1]
    if synth_with_dr.shape[1] != d or synth_without_dr.shape[1] != d:
        raise ShapeMismatchError(
            "variance_diagnostic", f"{d} columns everywhere",
            {"with_dr": synth_with_dr.shape[1], "without_dr": synth_without_dr.shape[1]},
        )
    profile = VarianceProfile(
        real=normalized_variances(real_x),
        with_dr=normalized_variances(synth_with_dr),
        without_dr=normalized_variances(synth_without_dr),
        pi_real=pi_statistic(real_x),
        pi_with_dr=pi_statistic(synth_with_dr),
        pi_without_dr=pi_statistic(synth_without_dr),
    )
    logger.info(
        f"Pi statistic: real={profile.pi_real:.4e} with_dr={profile.pi_with_dr:.4e} "
        f"without_dr={profile.pi_without_dr:.4e}"
    )
    return profile
