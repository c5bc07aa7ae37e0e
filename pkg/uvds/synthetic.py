"""
Desk-scale synthetic benchmark generator.

Features are a noisy linear image of the attributes, X = A G + sigma * noise,
with a ground-truth map G whose column d is scaled by exp(-decay * d / D)
so per-dimension variance decays the way it does for CNN features.
Class signatures are standard normal and shifted so the seen classes have
zero mean attributes. When there are enough seen classes their signatures
are also whitened (polar factor of the centered block), so the seen
attributes are decorrelated with unit variance.
"""

import logging
import math
from typing import Any, Dict

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from uvds.dataset import AttributeLevel, write_dataset
from uvds.exceptions import ConfigError

logger = logging.getLogger(__name__)


class SyntheticSpec(BaseModel):
    n_seen_classes: int = Field(default=20, ge=1)
    n_unseen_classes: int = Field(default=5, ge=1)
    per_class: int = Field(default=20, ge=2)
    n_features: int = Field(default=64, ge=2)
    n_attributes: int = Field(default=16, ge=2)
    noise_sigma: float = Field(default=0.01, ge=0.0)
    spectrum_decay: float = Field(default=3.0, ge=0.0)
    attribute_level: AttributeLevel = AttributeLevel.CLASS
    attribute_noise: float = Field(default=0.1, ge=0.0)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_dims(self):
        if self.n_features < self.n_attributes:
            raise ValueError("n_features must be >= n_attributes")
        return self


def build_spec(**values) -> SyntheticSpec:
    try:
        return SyntheticSpec(**values)
    except ValidationError as e:
        raise ConfigError(str(e))


def generate_arrays(spec: SyntheticSpec):
    """Return (features, attributes, labels, ground_truth_map) for a spec."""
    rng = np.random.default_rng(spec.seed)
    n_classes = spec.n_seen_classes + spec.n_unseen_classes
    m, d = spec.n_attributes, spec.n_features

    signatures = rng.standard_normal((n_classes, m))
    signatures -= signatures[: spec.n_seen_classes].mean(axis=0)
    if spec.n_seen_classes > m:
        u, _, vt = np.linalg.svd(signatures[: spec.n_seen_classes], full_matrices=False)
        signatures[: spec.n_seen_classes] = math.sqrt(spec.n_seen_classes) * (u @ vt)

    decay = np.exp(-spec.spectrum_decay * np.arange(d) / d)
    ground_truth = rng.standard_normal((m, d)) * decay / math.sqrt(m)

    labels = np.repeat(np.arange(1, n_classes + 1), spec.per_class)
    attributes = signatures[labels - 1]
    if spec.attribute_level == AttributeLevel.IMAGE and spec.attribute_noise > 0:
        attributes = attributes + spec.attribute_noise * rng.standard_normal(attributes.shape)

    features = attributes @ ground_truth
    if spec.noise_sigma > 0:
        features = features + spec.noise_sigma * rng.standard_normal(features.shape)
    return features, attributes, labels, ground_truth


def gen_synthetic(out_dir: str, **values) -> Dict[str, Any]:
    """Write a synthetic dataset directory; identical arguments give identical bytes."""
    spec = build_spec(**values)
    features, attributes, labels, _ = generate_arrays(spec)
    n_classes = spec.n_seen_classes + spec.n_unseen_classes
    meta = {
        "attribute_level": spec.attribute_level.value,
        "seen_classes": list(range(1, spec.n_seen_classes + 1)),
        "unseen_classes": list(range(spec.n_seen_classes + 1, n_classes + 1)),
    }
    write_dataset(out_dir, features, attributes, labels, meta)
    logger.info(
        f"Synthetic dataset written to {out_dir}: {len(labels)} rows, "
        f"{spec.n_seen_classes} seen / {spec.n_unseen_classes} unseen classes, "
        f"D={spec.n_features}, M={spec.n_attributes}"
    )
    return {"rows": int(len(labels)), **meta, "spec": spec.model_dump(mode="json")}
