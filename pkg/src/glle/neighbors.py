"""k-nearest-neighbor graphs under Euclidean distance.

Distances are computed exhaustively (n is at most a few thousand here), which
keeps the result exactly reproducible: no spatial index, no approximation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import Dataset


@dataclass
class NeighborhoodGraph:
    """Per-point neighbor indices, ordered by ascending distance.

    Attributes:
        k: neighbors per point.
        indices: (n, k) integer array; row i never contains i or duplicates.
        dataset_ref: name of the dataset the graph was built from.
    """

    k: int
    indices: np.ndarray
    dataset_ref: str = ""

    @property
    def n(self) -> int:
        return self.indices.shape[0]


def knn_indices(points: np.ndarray, k: int) -> np.ndarray:
    """Exhaustive kNN on raw coordinates.

    Returns an (n, k) index array sorted by ascending squared distance to the
    query point, the query itself excluded. Exact ties are broken by the
    smaller point index (stable sort over an index-ordered key).
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the number of points n={n}")
    out = np.empty((n, k), dtype=np.intp)
    for i in range(n):
        diff = points - points[i]
        d2 = np.einsum("ij,ij->i", diff, diff)
        d2[i] = np.inf
        order = np.argsort(d2, kind="stable")
        out[i] = order[:k]
    return out


def build_knn(ds: Dataset, k: int) -> NeighborhoodGraph:
    """Build the kNN graph of a dataset under Euclidean distance."""
    return NeighborhoodGraph(k=k, indices=knn_indices(ds.points, k), dataset_ref=ds.name)


def neighbor_matrix(graph: NeighborhoodGraph, ds: Dataset, i: int) -> np.ndarray:
    """Stack the coordinates of point i's neighbors as columns.

    Args:
        graph: graph built from ds.
        ds: the source dataset.
        i: query point index.

    Returns:
        (d, k) array whose column j is the j-th listed neighbor of i.
    """
    if graph.indices.shape[0] != ds.n:
        raise ValueError("graph and dataset sizes do not match")
    if not 0 <= i < ds.n:
        raise ValueError(f"point index {i} out of range for n={ds.n}")
    return ds.points[graph.indices[i]].T
