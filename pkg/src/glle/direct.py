"""Generative reconstruction weights sampled directly around the LLE solve.

Runs the deterministic pipeline once, derives a per-point covariance from the
neighbor coordinates in both the input and embedded spaces, and samples each
weight row from a Gaussian centered at the deterministic weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import Dataset
from .errors import SingularMatrixError
from .gaussian import GaussianParams, sample_psd
from .lle import DEFAULT_REG, Embedding, WeightMatrix, lle_pipeline
from .neighbors import build_knn

# Default multiple of the trace added when inverting X^T X + Y^T Y, which is
# singular whenever k exceeds d + p.
DEFAULT_GAMMA_REG = 1e-6

_STREAM_TAG = 31


@dataclass
class DirectParams:
    """Per-point sampling parameters derived from one deterministic run.

    Attributes:
        gammas: (n, k, k) covariances, inverse of the two-space Gram matrix.
        w_lle: (n, k) deterministic weight rows (the sampling means).
        exact_means: (n, k) unregularized-model conditional means
            Gamma (X^T x + Y^T y), kept for comparison.
    """

    gammas: np.ndarray
    w_lle: np.ndarray
    exact_means: np.ndarray


def gamma(X: np.ndarray, Y: np.ndarray, reg: float = DEFAULT_GAMMA_REG) -> np.ndarray:
    """Invert the stacked Gram matrix X^T X + Y^T Y with trace regularization.

    Args:
        X: (d, k) neighbor matrix in the input space.
        Y: (p, k) neighbor matrix in the embedded space.
        reg: multiple of the trace added to the diagonal before inversion.

    Returns:
        (k, k) symmetric positive-definite inverse.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise ValueError("X and Y must have matching column counts")
    if reg < 0:
        raise ValueError("reg must be non-negative")
    k = X.shape[1]
    C = X.T @ X + Y.T @ Y
    C = C + reg * np.trace(C) * np.eye(k)
    C = 0.5 * (C + C.T)
    w, v = np.linalg.eigh(C)
    if w[-1] <= 0 or w[0] <= 1e-14 * w[-1]:
        raise SingularMatrixError(
            "stacked Gram matrix is singular after regularization; increase reg"
        )
    inv = (v / w) @ v.T
    return 0.5 * (inv + inv.T)


def conditional_mean(
    X: np.ndarray, Y: np.ndarray, x: np.ndarray, y: np.ndarray, gamma_mat: np.ndarray
) -> np.ndarray:
    """Weight vector minimizing ||x - X w||^2 + ||y - Y w||^2 for PD Gram.

    Evaluates Gamma (X^T x + Y^T y), the stationary point of the two-space
    reconstruction objective.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = X.shape[1]
    if x.shape != (X.shape[0],) or y.shape != (Y.shape[0],) or Y.shape[1] != k:
        raise ValueError("shapes of X, Y, x, y are inconsistent")
    if np.asarray(gamma_mat).shape != (k, k):
        raise ValueError("gamma must be (k, k)")
    return gamma_mat @ (X.T @ x + Y.T @ y)


def sample_direct_weights(
    params: DirectParams,
    seed: int,
    scale: float = 1.0,
    use_exact_mean: bool = False,
    graph_ref: str = "",
) -> WeightMatrix:
    """Sample one weight row per point from N(center_i, scale * Gamma_i).

    The center is the deterministic weight row by default, or the two-space
    conditional mean when use_exact_mean is set. Stream (seed, i) per point.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    centers = params.exact_means if use_exact_mean else params.w_lle
    n, k = centers.shape
    rows = np.empty((n, k))
    for i in range(n):
        rng = np.random.default_rng([_STREAM_TAG, seed, i])
        g = GaussianParams(centers[i], scale * params.gammas[i])
        rows[i] = sample_psd(g, rng)
    return WeightMatrix(rows=rows, graph_ref=graph_ref, constrained=False)


def run_direct(
    ds: Dataset,
    k: int,
    p: int,
    seed: int,
    scale: float = 1.0,
    reg: float = DEFAULT_GAMMA_REG,
    lle_reg: float = DEFAULT_REG,
    use_exact_mean: bool = False,
) -> tuple[WeightMatrix, DirectParams, Embedding]:
    """Deterministic solve followed by direct weight sampling.

    Returns the sampled weights, the per-point sampling parameters, and the
    deterministic embedding they were derived from (useful for comparisons;
    callers embed the sampled weights themselves).
    """
    emb, w_lle = lle_pipeline(ds, k, p, lle_reg)
    graph = build_knn(ds, k)
    n = ds.n
    gammas = np.empty((n, k, k))
    exact_means = np.empty((n, k))
    for i in range(n):
        X = ds.points[graph.indices[i]].T
        Y = emb.coords[graph.indices[i]].T
        g = gamma(X, Y, reg)
        gammas[i] = g
        exact_means[i] = conditional_mean(X, Y, ds.points[i], emb.coords[i], g)
    params = DirectParams(gammas=gammas, w_lle=w_lle.rows, exact_means=exact_means)
    weights = sample_direct_weights(
        params, seed, scale, use_exact_mean, graph_ref=graph.dataset_ref
    )
    return weights, params, emb
