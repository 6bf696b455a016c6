"""Locally linear embedding: reconstruction weights and the spectral embed.

The weight solve and the eigenproblem are shared by the deterministic method
and both generative variants; only where the weight rows come from differs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
from threadpoolctl import threadpool_limits

from .datasets import Dataset
from .errors import SingularMatrixError
from .neighbors import NeighborhoodGraph, build_knn

# Default multiple of tr(G) added to the local Gram matrix. Required whenever
# k exceeds the input dimension, which makes G rank-deficient.
DEFAULT_REG = 1e-3

# Eigenvalues below this multiple of the largest are treated as the null
# space of the embedding matrix and skipped.
NULL_SPACE_CUTOFF = 1e-8


@dataclass
class WeightMatrix:
    """Reconstruction weight rows, one per point.

    Attributes:
        rows: (n, k) array; row i holds the weights of point i's neighbors.
        graph_ref: name of the dataset/graph the rows refer to.
        constrained: True when every row is constrained to sum to 1
            (deterministic solve); False for sampled rows.
    """

    rows: np.ndarray
    graph_ref: str = ""
    constrained: bool = True


@dataclass
class Embedding:
    """Embedded coordinates and the eigenvalues that produced them.

    coords is (n, p) scaled so that coords.T @ coords / n is the identity;
    eigenvalues holds the p retained eigenvalues in ascending order.
    """

    coords: np.ndarray
    eigenvalues: np.ndarray


def local_gram(x: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Gram matrix of the difference vectors between a point and its neighbors.

    Args:
        x: (d,) query point.
        X: (d, k) neighbor matrix.

    Returns:
        (k, k) symmetric PSD matrix G with G[a, b] = (x - X[:, a]) . (x - X[:, b]).
    """
    x = np.asarray(x, dtype=float)
    X = np.asarray(X, dtype=float)
    if x.ndim != 1 or X.ndim != 2 or X.shape[0] != x.size:
        raise ValueError("x must be (d,) and X must be (d, k)")
    diff = x[:, None] - X
    g = diff.T @ diff
    return 0.5 * (g + g.T)


def solve_weights(G: np.ndarray, reg: float = DEFAULT_REG) -> np.ndarray:
    """Minimize w^T (G + reg tr(G) I) w subject to sum(w) = 1.

    The closed form is w = A^-1 1 / (1^T A^-1 1) for the regularized matrix A.
    Raises SingularMatrixError (suggesting a larger reg) when A is not
    numerically positive definite.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError("G must be square")
    if reg < 0:
        raise ValueError("reg must be non-negative")
    k = G.shape[0]
    if k == 1:
        return np.array([1.0])
    A = G + reg * np.trace(G) * np.eye(k)
    ones = np.ones(k)
    try:
        c, low = scipy.linalg.cho_factor(A)
        w0 = scipy.linalg.cho_solve((c, low), ones)
    except scipy.linalg.LinAlgError:
        raise SingularMatrixError(
            "regularized Gram matrix is numerically singular; increase reg"
        ) from None
    denom = float(ones @ w0)
    if not np.isfinite(denom) or denom <= 0:
        raise SingularMatrixError(
            "regularized Gram matrix is numerically singular; increase reg"
        )
    return w0 / denom


def reconstruct_all(ds: Dataset, graph: NeighborhoodGraph, reg: float = DEFAULT_REG) -> WeightMatrix:
    """Solve the constrained weight problem for every point."""
    if graph.indices.shape[0] != ds.n:
        raise ValueError("graph and dataset sizes do not match")
    rows = np.empty((ds.n, graph.k))
    for i in range(ds.n):
        G = local_gram(ds.points[i], ds.points[graph.indices[i]].T)
        try:
            rows[i] = solve_weights(G, reg)
        except SingularMatrixError as exc:
            raise SingularMatrixError(f"point {i}: {exc}") from None
    return WeightMatrix(rows=rows, graph_ref=graph.dataset_ref, constrained=True)


def scatter_weights(W: WeightMatrix, graph: NeighborhoodGraph) -> scipy.sparse.csr_matrix:
    """Scatter (n, k) weight rows into a sparse (n, n) matrix.

    Entry (i, j) is W.rows[i, a] when j is the a-th neighbor of i, zero
    elsewhere; each row keeps exactly k nonzeros.
    """
    n, k = W.rows.shape
    if graph.indices.shape != (n, k):
        raise ValueError("weight rows and graph indices have different shapes")
    rows = np.repeat(np.arange(n), k)
    cols = graph.indices.reshape(-1)
    mat = scipy.sparse.csr_matrix((W.rows.reshape(-1), (rows, cols)), shape=(n, n))
    return mat


def embedding_matrix(W_scatter: scipy.sparse.spmatrix) -> scipy.sparse.csr_matrix:
    """Form M = (I - W)^T (I - W) for a scattered weight matrix."""
    n, m = W_scatter.shape
    if n != m:
        raise ValueError("scattered weight matrix must be square")
    A = scipy.sparse.identity(n, format="csr") - W_scatter.tocsr()
    M = (A.T @ A).tocsr()
    M = 0.5 * (M + M.T)
    return M.tocsr()


def embed(M, p: int) -> Embedding:
    """Solve the embedding eigenproblem for the p smallest non-null directions.

    The matrix is centered on both sides (projecting out the constant
    direction) before the dense symmetric eigensolve. For weight rows that sum
    to one this leaves M unchanged, since the constant vector is already in
    its null space; for sampled rows it enforces the zero-mean constraint the
    eigenproblem is derived under. Eigenvalues below NULL_SPACE_CUTOFF times
    the largest are treated as the null space and skipped, each retained
    eigenvector gets its largest-magnitude entry made positive, and columns
    are scaled by sqrt(n) so the embedded points have unit covariance.
    """
    if scipy.sparse.issparse(M):
        H = M.toarray()
    else:
        H = np.array(M, dtype=float, copy=True)
    n = H.shape[0]
    if H.ndim != 2 or H.shape[1] != n:
        raise ValueError("M must be square")
    if not 1 <= p <= n - 2:
        raise ValueError(f"p={p} must satisfy 1 <= p <= n - 2 = {n - 2}")
    # Double centering applies the projector P = I - 11^T/n on both sides.
    row_mean = H.mean(axis=1, keepdims=True)
    col_mean = H.mean(axis=0, keepdims=True)
    H = H - row_mean - col_mean + H.mean()
    H = 0.5 * (H + H.T)
    with threadpool_limits(limits=1):
        eigvals, eigvecs = scipy.linalg.eigh(H, overwrite_a=True)
    cutoff = NULL_SPACE_CUTOFF * eigvals[-1] if eigvals[-1] > 0 else np.inf
    nonnull = np.flatnonzero(eigvals >= cutoff)
    null_dim = n - nonnull.size
    if p > nonnull.size:
        raise ValueError(
            f"p={p} exceeds the {nonnull.size} usable eigenvectors "
            f"(null-space dimension {null_dim})"
        )
    take = nonnull[:p]
    coords = eigvecs[:, take] * np.sqrt(n)
    for j in range(p):
        col = coords[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            coords[:, j] = -col
    return Embedding(coords=coords, eigenvalues=eigvals[take].copy())


def lle_pipeline(ds: Dataset, k: int, p: int, reg: float = DEFAULT_REG) -> tuple[Embedding, WeightMatrix]:
    """Full deterministic pipeline: kNN graph, weights, scatter, eigenproblem."""
    graph = build_knn(ds, k)
    W = reconstruct_all(ds, graph, reg)
    M = embedding_matrix(scatter_weights(W, graph))
    return embed(M, p), W
