"""
Data model and ingestion for (features, attributes, labels) triples.

A dataset directory holds headerless CSV files plus a meta.json:

    features.csv    N x D decimals
    attributes.csv  N x M decimals
    labels.csv      N positive integers, one per line
    meta.json       {"attribute_level": "class"|"image",
                     "seen_classes": [...], "unseen_classes": [...]}

Seen features are centered with their own column mean; unseen features are
centered with the SEEN mean, since unseen statistics are unavailable at
training time.
"""

import json
import logging
import math
import os
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from uvds.exceptions import (
    ClassTooSmallError,
    DatasetIOError,
    EmptySideError,
    InvalidSplitError,
    ShapeMismatchError,
    UnknownClassError,
)
from uvds.kernels import Matrix, Vector, as_matrix, center_columns

logger = logging.getLogger(__name__)

FEATURES_FILE = "features.csv"
ATTRIBUTES_FILE = "attributes.csv"
LABELS_FILE = "labels.csv"
META_FILE = "meta.json"
CSV_FORMAT = "%.17g"


class AttributeLevel(str, Enum):
    CLASS = "class"
    IMAGE = "image"


class SplitSpec(BaseModel):
    """Seen/unseen class partition plus the validation hold-out fraction"""

    seen_classes: List[int]
    unseen_classes: List[int]
    validation_fraction: float = Field(default=0.5, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_disjoint(self):
        if not self.seen_classes or not self.unseen_classes:
            raise InvalidSplitError("seen and unseen class lists must be non-empty")
        overlap = set(self.seen_classes) & set(self.unseen_classes)
        if overlap:
            raise InvalidSplitError("seen and unseen classes overlap", sorted(overlap))
        return self


@dataclass(frozen=True)
class AttributeScaler:
    """Per-column z-score statistics taken from the seen attributes."""

    mean: Vector
    scale: Vector

    @classmethod
    def fit(cls, attributes: Matrix) -> "AttributeScaler":
        mean = attributes.mean(axis=0)
        scale = attributes.std(axis=0)
        scale = np.where(scale > 0.0, scale, 1.0)
        return cls(mean=mean, scale=scale)

    def transform(self, attributes: Matrix) -> Matrix:
        return (attributes - self.mean) / self.scale

    def inverse(self, attributes: Matrix) -> Matrix:
        return attributes * self.scale + self.mean


@dataclass(frozen=True)
class Dataset:
    """
    Seen-side training data.

    `labels` are relabeled to 1..C; `class_ids[c - 1]` is the original id of
    label c. `row_index` records each row's position in the source files.
    """

    features: Matrix
    attributes: Matrix
    labels: np.ndarray
    attribute_level: AttributeLevel
    feature_mean: Vector
    class_ids: np.ndarray
    row_index: Optional[np.ndarray] = None
    attribute_scaler: Optional[AttributeScaler] = None

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_attributes(self) -> int:
        return self.attributes.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_ids)


@dataclass(frozen=True)
class UnseenSet:
    """Unseen-side attributes, labels (relabeled 1..C_hat) and optional real features."""

    attributes: Matrix
    labels: np.ndarray
    class_ids: np.ndarray
    true_features: Optional[Matrix] = None
    row_index: Optional[np.ndarray] = None

    @property
    def n_samples(self) -> int:
        return self.attributes.shape[0]


def _read_matrix(path: str) -> Matrix:
    try:
        m = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except OSError as e:
        raise DatasetIOError(path, str(e))
    except ValueError as e:
        raise DatasetIOError(path, f"unparseable content ({e})")
    return as_matrix(m, os.path.basename(path))


def _read_labels(path: str) -> np.ndarray:
    raw = _read_matrix(path)
    if raw.shape[1] != 1:
        raise DatasetIOError(path, "labels.csv must contain exactly one column")
    raw = raw[:, 0]
    labels = raw.astype(np.int64)
    if np.any(labels != raw) or np.any(labels < 1):
        raise DatasetIOError(path, "labels must be positive integers")
    return labels


def read_meta(dir_path: str) -> Dict[str, Any]:
    path = os.path.join(dir_path, META_FILE)
    try:
        with open(path, "r") as f:
            return json.load(f)
    except OSError as e:
        raise DatasetIOError(path, str(e))
    except json.JSONDecodeError as e:
        raise DatasetIOError(path, f"invalid JSON ({e})")


def split_from_meta(meta: Dict[str, Any], validation_fraction: float = 0.5) -> SplitSpec:
    try:
        return SplitSpec(
            seen_classes=meta["seen_classes"],
            unseen_classes=meta["unseen_classes"],
            validation_fraction=validation_fraction,
        )
    except KeyError as e:
        raise DatasetIOError(META_FILE, f"missing key {e}")
    except ValidationError as e:
        raise DatasetIOError(META_FILE, f"invalid split ({e.error_count()} errors)")


def relabel(labels: np.ndarray, class_ids: np.ndarray) -> np.ndarray:
    """Map original ids (sorted `class_ids`) onto 1..C."""
    return np.searchsorted(class_ids, labels).astype(np.int64) + 1


def check_class_level(attributes: Matrix, labels: np.ndarray) -> Optional[int]:
    """Return the first label whose rows disagree, or None when all classes are constant."""
    for c in np.unique(labels):
        rows = attributes[labels == c]
        if not np.array_equal(rows, np.broadcast_to(rows[0], rows.shape)):
            return int(c)
    return None


def load_dataset(
    dir_path: str,
    split: Optional[SplitSpec] = None,
    normalize_attributes: bool = False,
) -> Tuple[Dataset, UnseenSet]:
    """
    Load a dataset directory and partition it into seen and unseen sides.

    When `split` is None the class lists are taken from meta.json. Rows whose
    label is in neither list are ignored.
    """
    meta = read_meta(dir_path)
    if split is None:
        split = split_from_meta(meta)
    try:
        level = AttributeLevel(meta.get("attribute_level", "image"))
    except ValueError:
        raise DatasetIOError(os.path.join(dir_path, META_FILE),
                             f"unknown attribute_level {meta.get('attribute_level')!r}")

    features = _read_matrix(os.path.join(dir_path, FEATURES_FILE))
    attributes = _read_matrix(os.path.join(dir_path, ATTRIBUTES_FILE))
    labels = _read_labels(os.path.join(dir_path, LABELS_FILE))

    n = features.shape[0]
    if attributes.shape[0] != n or labels.shape[0] != n:
        raise ShapeMismatchError(
            "load_dataset",
            f"{n} rows in every file",
            {"features": n, "attributes": attributes.shape[0], "labels": labels.shape[0]},
        )

    present = set(np.unique(labels).tolist())
    missing = (set(split.seen_classes) | set(split.unseen_classes)) - present
    if missing:
        raise UnknownClassError(missing)

    seen_ids = np.array(sorted(split.seen_classes), dtype=np.int64)
    unseen_ids = np.array(sorted(split.unseen_classes), dtype=np.int64)
    seen_mask = np.isin(labels, seen_ids)
    unseen_mask = np.isin(labels, unseen_ids)
    if not seen_mask.any():
        raise EmptySideError("seen")
    if not unseen_mask.any():
        raise EmptySideError("unseen")
    ignored = int(n - seen_mask.sum() - unseen_mask.sum())
    if ignored:
        logger.info(f"Ignoring {ignored} rows whose classes are outside the split")

    if level == AttributeLevel.CLASS:
        bad = check_class_level(attributes, labels)
        if bad is not None:
            raise DatasetIOError(os.path.join(dir_path, ATTRIBUTES_FILE),
                                 f"class-level attributes differ within class {bad}")

    seen_features, feature_mean = center_columns(features[seen_mask])
    unseen_features = features[unseen_mask] - feature_mean

    seen_attributes = attributes[seen_mask]
    unseen_attributes = attributes[unseen_mask]
    scaler = None
    if normalize_attributes:
        scaler = AttributeScaler.fit(seen_attributes)
        seen_attributes = scaler.transform(seen_attributes)
        unseen_attributes = scaler.transform(unseen_attributes)

    rows = np.arange(n)
    ds = Dataset(
        features=seen_features,
        attributes=seen_attributes,
        labels=relabel(labels[seen_mask], seen_ids),
        attribute_level=level,
        feature_mean=feature_mean,
        class_ids=seen_ids,
        row_index=rows[seen_mask],
        attribute_scaler=scaler,
    )
    unseen = UnseenSet(
        attributes=unseen_attributes,
        labels=relabel(labels[unseen_mask], unseen_ids),
        class_ids=unseen_ids,
        true_features=unseen_features,
        row_index=rows[unseen_mask],
    )
    logger.info(
        f"Loaded {dir_path}: N={ds.n_samples} seen rows ({ds.n_classes} classes), "
        f"{unseen.n_samples} unseen rows ({len(unseen_ids)} classes), "
        f"D={ds.n_features}, M={ds.n_attributes}, attributes={level.value}"
    )
    return ds, unseen


def write_dataset(
    dir_path: str,
    features: Matrix,
    attributes: Matrix,
    labels: np.ndarray,
    meta: Dict[str, Any],
) -> None:
    """Write the four dataset files; numbers are printed with 17 significant digits."""
    try:
        os.makedirs(dir_path, exist_ok=True)
        np.savetxt(os.path.join(dir_path, FEATURES_FILE), features, fmt=CSV_FORMAT, delimiter=",")
        np.savetxt(os.path.join(dir_path, ATTRIBUTES_FILE), attributes, fmt=CSV_FORMAT, delimiter=",")
        np.savetxt(os.path.join(dir_path, LABELS_FILE),
                   np.asarray(labels, dtype=np.int64).reshape(-1, 1), fmt="%d")
        with open(os.path.join(dir_path, META_FILE), "w") as f:
            json.dump(meta, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise DatasetIOError(dir_path, str(e))


def restore_rows(ds: Dataset, unseen: UnseenSet) -> Tuple[Matrix, Matrix, np.ndarray]:
    """
    Undo centering, normalization and relabeling, returning the rows of both
    sides in their original file order.
    """
    if ds.row_index is None or unseen.row_index is None or unseen.true_features is None:
        raise ShapeMismatchError("restore_rows", "datasets loaded from disk", "derived datasets")
    order = np.concatenate([ds.row_index, unseen.row_index])
    features = np.vstack([ds.features, unseen.true_features]) + ds.feature_mean
    attributes = np.vstack([ds.attributes, unseen.attributes])
    if ds.attribute_scaler is not None:
        attributes = ds.attribute_scaler.inverse(attributes)
    labels = np.concatenate([ds.class_ids[ds.labels - 1], unseen.class_ids[unseen.labels - 1]])

    position = np.argsort(order, kind="stable")
    return features[position], attributes[position], labels[position]


def class_means(values: Matrix, labels: np.ndarray) -> Tuple[Matrix, np.ndarray]:
    """Per-class row means, with class ids sorted ascending."""
    ids = np.unique(labels)
    means = np.vstack([values[labels == c].mean(axis=0) for c in ids])
    return means, ids


def class_mean_attributes(ds: Dataset) -> Tuple[Matrix, np.ndarray]:
    return class_means(ds.attributes, ds.labels)


def _subset(ds: Dataset, rows: np.ndarray, mean: Vector) -> Dataset:
    return replace(
        ds,
        features=ds.features[rows] - mean,
        attributes=ds.attributes[rows],
        labels=ds.labels[rows],
        feature_mean=ds.feature_mean + mean,
        row_index=None if ds.row_index is None else ds.row_index[rows],
    )


def validation_indices(labels: np.ndarray, fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Class-stratified hold-out: each class gives ceil(fraction * n_c) rows to
    validation (at most n_c - 1). Returns sorted (train, val) row indices.
    """
    if not 0.0 < fraction < 1.0:
        raise InvalidSplitError(f"validation fraction {fraction} is outside (0, 1)")
    rng = np.random.default_rng(seed)
    train: List[np.ndarray] = []
    val: List[np.ndarray] = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if len(members) < 2:
            raise ClassTooSmallError(int(c), len(members))
        n_val = min(math.ceil(fraction * len(members)), len(members) - 1)
        shuffled = rng.permutation(members)
        val.append(shuffled[:n_val])
        train.append(shuffled[n_val:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(val))


def split_validation(ds: Dataset, fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """
    Split a seen dataset into train/validation parts.

    The train part is re-centered with its own mean and the validation part
    is centered with the same (train) mean.
    """
    train_rows, val_rows = validation_indices(ds.labels, fraction, seed)
    shift = ds.features[train_rows].mean(axis=0)
    return _subset(ds, train_rows, shift), _subset(ds, val_rows, shift)
