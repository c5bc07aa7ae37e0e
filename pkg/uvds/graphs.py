"""
Dual-graph construction: visual k-nn graph, semantic graph, their mean and
the graph Laplacian used by the structure-preservation term.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from uvds.dataset import AttributeLevel, Dataset
from uvds.exceptions import BadKError, DatasetIOError
from uvds.kernels import Matrix, as_matrix

logger = logging.getLogger(__name__)

DEFAULT_K = 10


@dataclass(frozen=True)
class GraphSet:
    w_visual: Matrix
    w_semantic: Matrix
    w_mean: Matrix
    laplacian: Matrix


def knn_graph(points: Matrix, k: int) -> Matrix:
    """
    Binary symmetric k-nn graph: w_ij = 1 when i is among the k nearest
    neighbours of j or j among those of i. Distance ties at the k-th
    neighbour go to the lower index.
    """
    points = as_matrix(points, "knn_graph")
    n = points.shape[0]
    if n < 2 or not 1 <= k <= n - 1:
        raise BadKError(k, n)

    dist = cdist(points, points, metric="euclidean")
    np.fill_diagonal(dist, np.inf)
    neighbours = np.argsort(dist, axis=1, kind="stable")[:, :k]

    directed = np.zeros((n, n))
    directed[np.repeat(np.arange(n), k), neighbours.ravel()] = 1.0
    w = np.maximum(directed, directed.T)
    np.fill_diagonal(w, 0.0)
    return w


def class_graph(labels: np.ndarray, k: int) -> Matrix:
    """Same-class vertices joined by a normalised edge k / n_c; no self-loops."""
    labels = np.asarray(labels)
    same = labels[:, None] == labels[None, :]
    _, inverse, counts = np.unique(labels, return_inverse=True, return_counts=True)
    weights = k / counts[inverse].astype(np.float64)
    w = np.where(same, weights[:, None], 0.0)
    np.fill_diagonal(w, 0.0)
    return w


def laplacian(w: Matrix) -> Matrix:
    return np.diag(w.sum(axis=1)) - w


def build_graphset(ds: Dataset, k: int = DEFAULT_K) -> GraphSet:
    """
    W_X from the visual features, W_A from the attributes (k-nn for
    image-level attributes, normalised class graph for class-level ones),
    W = (W_X + W_A) / 2 and L = D - W.
    """
    n = ds.n_samples
    k_eff = min(k, n - 1)
    if k_eff != k:
        logger.warning(f"k={k} clamped to {k_eff} for a {n}-row dataset")

    w_visual = knn_graph(ds.features, k_eff)
    if ds.attribute_level == AttributeLevel.CLASS:
        w_semantic = class_graph(ds.labels, k_eff)
    else:
        w_semantic = knn_graph(ds.attributes, k_eff)
    w_mean = 0.5 * (w_visual + w_semantic)

    logger.debug(
        f"Graphs built: {int(w_visual.sum() / 2)} visual edges, "
        f"{int(np.count_nonzero(w_semantic) / 2)} semantic edges (k={k_eff})"
    )
    return GraphSet(
        w_visual=w_visual,
        w_semantic=w_semantic,
        w_mean=w_mean,
        laplacian=laplacian(w_mean),
    )


def dump_graph(path: str, w: Matrix) -> None:
    try:
        np.savetxt(path, w, fmt="%.17g", delimiter=",")
    except OSError as e:
        raise DatasetIOError(path, str(e))
