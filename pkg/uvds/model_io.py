"""
Flat-text model file.

    # uvds-model v1
    [dims]
    N,D,M
    [config]
    {"alpha": 1.0, ...}
    [P]            M rows of D values
    [Q]            D rows of D values
    [feature_mean] 1 row of D values
    [attribute_mean] / [attribute_scale]   only when attributes were normalized

Numbers are written with 17 significant digits so every float64 survives
the round trip bit for bit.
"""

import json
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from uvds.dataset import AttributeScaler
from uvds.exceptions import DatasetIOError, ShapeMismatchError
from uvds.kernels import Matrix, Vector
from uvds.solver import SolverConfig

logger = logging.getLogger(__name__)

HEADER = "# uvds-model v1"
NUMBER_FORMAT = "{:.17g}"


@dataclass(frozen=True)
class TrainedModel:
    """Everything needed to synthesize features for new attribute rows."""

    p: Matrix
    q: Matrix
    feature_mean: Vector
    config: SolverConfig
    n_samples: int
    attribute_scaler: Optional[AttributeScaler] = None

    @property
    def n_features(self) -> int:
        return self.q.shape[0]

    @property
    def n_attributes(self) -> int:
        return self.p.shape[0]


def _format_rows(m: np.ndarray) -> List[str]:
    m = np.atleast_2d(m)
    return [",".join(NUMBER_FORMAT.format(float(x)) for x in row) for row in m]


def dumps_model(model: TrainedModel) -> str:
    lines = [HEADER, "[dims]", f"{model.n_samples},{model.n_features},{model.n_attributes}"]
    lines += ["[config]", json.dumps(model.config.model_dump(by_alias=True), sort_keys=True)]
    lines += ["[P]"] + _format_rows(model.p)
    lines += ["[Q]"] + _format_rows(model.q)
    lines += ["[feature_mean]"] + _format_rows(model.feature_mean)
    if model.attribute_scaler is not None:
        lines += ["[attribute_mean]"] + _format_rows(model.attribute_scaler.mean)
        lines += ["[attribute_scale]"] + _format_rows(model.attribute_scaler.scale)
    return "\n".join(lines) + "\n"


def save_model(path: str, model: TrainedModel) -> None:
    try:
        with open(path, "w", newline="\n") as f:
            f.write(dumps_model(model))
    except OSError as e:
        raise DatasetIOError(path, str(e))
    logger.info(f"Model written to {path}")


def _parse_blocks(text: str, source: str) -> Dict[str, List[str]]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise DatasetIOError(source, "missing model header")
    blocks: Dict[str, List[str]] = {}
    current = None
    for line in lines[1:]:
        line = line.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            blocks[current] = []
        elif current is None:
            raise DatasetIOError(source, f"data outside a block: {line[:40]!r}")
        else:
            blocks[current].append(line)
    return blocks


def _parse_matrix(rows: List[str], source: str, name: str) -> np.ndarray:
    try:
        return np.array([[float(x) for x in row.split(",")] for row in rows], dtype=np.float64)
    except ValueError as e:
        raise DatasetIOError(source, f"bad number in block [{name}] ({e})")


def loads_model(text: str, source: str = "<model>") -> TrainedModel:
    blocks = _parse_blocks(text, source)
    for name in ("dims", "config", "P", "Q", "feature_mean"):
        if name not in blocks:
            raise DatasetIOError(source, f"missing block [{name}]")
    try:
        n, d, m = (int(x) for x in blocks["dims"][0].split(","))
    except (ValueError, IndexError):
        raise DatasetIOError(source, "malformed [dims] block")

    config = SolverConfig.build(**json.loads(blocks["config"][0]))
    p = _parse_matrix(blocks["P"], source, "P")
    q = _parse_matrix(blocks["Q"], source, "Q")
    mean = _parse_matrix(blocks["feature_mean"], source, "feature_mean")[0]
    if p.shape != (m, d) or q.shape != (d, d) or mean.shape != (d,):
        raise ShapeMismatchError("loads_model", f"P {m}x{d}, Q {d}x{d}, mean {d}",
                                 {"P": p.shape, "Q": q.shape, "mean": mean.shape})

    scaler = None
    if "attribute_mean" in blocks and "attribute_scale" in blocks:
        scaler = AttributeScaler(
            mean=_parse_matrix(blocks["attribute_mean"], source, "attribute_mean")[0],
            scale=_parse_matrix(blocks["attribute_scale"], source, "attribute_scale")[0],
        )
    return TrainedModel(p=p, q=q, feature_mean=mean, config=config, n_samples=n, attribute_scaler=scaler)


def load_model(path: str) -> TrainedModel:
    try:
        with open(path, "r") as f:
            text = f.read()
    except OSError as e:
        raise DatasetIOError(path, str(e))
    return loads_model(text, path)
