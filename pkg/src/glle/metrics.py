"""Embedding quality numbers: neighborhood overlap and orthogonal alignment."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .datasets import Dataset
from .lle import Embedding
from .neighbors import knn_indices


@dataclass
class ComparisonReport:
    """Summary of one generative run against a deterministic reference."""

    neighborhood_preservation: float
    procrustes_residual: float
    per_generation: list = field(default_factory=list)


def neighborhood_preservation(ds: Dataset, emb: Embedding, k: int) -> float:
    """Mean fraction of input-space neighbors kept in the embedding.

    For each point, the k nearest neighbors are found in both spaces and the
    overlap is divided by k; the mean over points lies in [0, 1].
    """
    n = ds.n
    if emb.coords.shape[0] != n:
        raise ValueError("dataset and embedding sizes do not match")
    if not 1 <= k < n:
        raise ValueError("k must satisfy 1 <= k < n")
    nn_in = knn_indices(ds.points, k)
    nn_out = knn_indices(emb.coords, k)
    overlap = 0
    for i in range(n):
        overlap += np.intersect1d(nn_in[i], nn_out[i], assume_unique=True).size
    return overlap / (n * k)


def procrustes_residual(A: np.ndarray, B: np.ndarray) -> float:
    """Relative misfit of B to A over all orthogonal alignments.

    Computes min over orthogonal Q of ||A - B Q||_F / ||A||_F using the
    closed form Q = U V^T from the SVD of B^T A. Reflections are allowed
    because embedding column signs are arbitrary.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 2:
        raise ValueError("A and B must be matrices of the same shape")
    norm_a = np.linalg.norm(A)
    if norm_a == 0:
        return 0.0 if np.linalg.norm(B) == 0 else np.inf
    with threadpool_limits(limits=1):
        u, _, vt = np.linalg.svd(B.T @ A)
        q = u @ vt
        return float(np.linalg.norm(A - B @ q) / norm_a)


def save_metrics_csv(path: str, rows: list[dict]) -> None:
    """Write metric rows (method, seed, scale, preservation, procrustes_vs_lle)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("method,seed,scale,preservation,procrustes_vs_lle\n")
        for r in rows:
            fh.write(
                f"{r['method']},{r['seed']},{r['scale']:.17g},"
                f"{r['preservation']:.17g},{r['procrustes_vs_lle']:.17g}\n"
            )
