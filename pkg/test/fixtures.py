"""
Shared test fixtures: tiny synthetic corpora written to temporary directories.
"""

import os
import shutil
import tempfile

import numpy as np

from uvds.dataset import AttributeLevel, Dataset, UnseenSet, load_dataset
from uvds.graphs import build_graphset
from uvds.solver import SolverConfig
from uvds.synthetic import gen_synthetic

SMALL = dict(
    n_seen_classes=6,
    n_unseen_classes=3,
    per_class=6,
    n_features=8,
    n_attributes=4,
    noise_sigma=0.01,
)

FAST_CONFIG = dict(outer_iters=3, q_max_iters=10, k=4)


class TempDirMixin:
    """Creates self.tmp and removes it after each test."""

    def setUp(self):
        super().setUp()
        self.tmp = tempfile.mkdtemp(prefix="uvds-test-")

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)
        super().tearDown()

    def path(self, *parts: str) -> str:
        return os.path.join(self.tmp, *parts)


def write_small(dir_path: str, **overrides) -> str:
    gen_synthetic(dir_path, **{**SMALL, **overrides})
    return dir_path


def load_synthetic(**values):
    """(Dataset, UnseenSet) for a synthetic corpus; no arguments gives the default one."""
    tmp = tempfile.mkdtemp(prefix="uvds-fixture-")
    try:
        gen_synthetic(tmp, **values)
        return load_dataset(tmp)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def load_small(**overrides):
    return load_synthetic(**{**SMALL, **overrides})


def fast_config(**overrides) -> SolverConfig:
    return SolverConfig.build(**{**FAST_CONFIG, **overrides})


def random_dataset(n: int = 12, d: int = 5, m: int = 3, n_classes: int = 3, seed: int = 0,
                   level: AttributeLevel = AttributeLevel.IMAGE) -> Dataset:
    """Centered random image-level dataset with balanced labels 1..n_classes."""
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, d))
    mean = features.mean(axis=0)
    labels = np.arange(n) % n_classes + 1
    return Dataset(
        features=features - mean,
        attributes=rng.standard_normal((n, m)),
        labels=labels,
        attribute_level=level,
        feature_mean=mean,
        class_ids=np.arange(1, n_classes + 1),
    )


def random_graphset(ds: Dataset, k: int = 3):
    return build_graphset(ds, k)


def toy_unseen() -> UnseenSet:
    attributes = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    return UnseenSet(
        attributes=attributes,
        labels=np.array([1, 1, 2, 2]),
        class_ids=np.array([7, 9]),
        true_features=attributes.copy(),
    )
