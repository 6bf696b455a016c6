"""Multivariate Gaussian utilities.

Covariances here are frequently rank-deficient (posterior weight covariances
have rank k - d), so inversion goes through a symmetric eigendecomposition
with a relative spectral cutoff rather than a triangular factorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrixError

# Relative eigenvalue cutoff for pseudo-inverses and pseudo-determinants.
PINV_CUTOFF = 1e-10

# Relative asymmetry tolerated in covariance matrices.
SYM_TOL = 1e-10


def _check_symmetric(a: np.ndarray, what: str = "covariance") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what} must be a square matrix")
    scale = np.abs(a).max()
    if scale > 0 and np.abs(a - a.T).max() > SYM_TOL * scale:
        raise ValueError(f"{what} is not symmetric within tolerance")
    return 0.5 * (a + a.T)


def sym_pinv(a: np.ndarray) -> np.ndarray:
    """Pseudo-inverse of a symmetric matrix with a relative spectral cutoff."""
    w, v = np.linalg.eigh(_check_symmetric(a, "matrix"))
    scale = np.abs(w).max() if w.size else 0.0
    keep = np.abs(w) > PINV_CUTOFF * scale
    if not keep.any():
        return np.zeros_like(a, dtype=float)
    inv = (v[:, keep] / w[keep]) @ v[:, keep].T
    return 0.5 * (inv + inv.T)


@dataclass
class GaussianParams:
    """Mean and covariance of a (possibly degenerate) Gaussian."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = _check_symmetric(self.cov)
        if self.mean.ndim != 1 or self.cov.shape != (self.mean.size, self.mean.size):
            raise ValueError("mean must be a vector matching the covariance size")

    @property
    def dim(self) -> int:
        return self.mean.size


def log_pdf(x: np.ndarray, g: GaussianParams) -> float:
    """Log density of a strictly positive-definite Gaussian at x.

    Raises SingularMatrixError when the smallest eigenvalue of the covariance
    is not above 1e-12 times the largest.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (g.dim,):
        raise ValueError("x must match the Gaussian dimension")
    w, v = np.linalg.eigh(g.cov)
    if w[-1] <= 0 or w[0] <= 1e-12 * w[-1]:
        raise SingularMatrixError("covariance is singular; log density is undefined")
    z = v.T @ (x - g.mean)
    quad = float(np.sum(z * z / w))
    logdet = float(np.sum(np.log(w)))
    return -0.5 * (g.dim * np.log(2.0 * np.pi) + logdet + quad)


def condition(
    joint: GaussianParams, split: tuple[int, int], observed_first_block: np.ndarray
) -> GaussianParams:
    """Condition a jointly Gaussian vector on its first block.

    Args:
        joint: distribution of the stacked vector [x1, x2].
        split: sizes (m1, m2) of the two blocks.
        observed_first_block: observed value of x1.

    Returns:
        GaussianParams of x2 given x1, with mean
        mu2 + S21 pinv(S11) (x1 - mu1) and covariance S22 - S21 pinv(S11) S12.
    """
    m1, m2 = split
    if m1 < 1 or m2 < 1 or m1 + m2 != joint.dim:
        raise ValueError("split sizes must be positive and sum to the joint dimension")
    x1 = np.asarray(observed_first_block, dtype=float)
    if x1.shape != (m1,):
        raise ValueError("observed block has the wrong length")
    s11 = joint.cov[:m1, :m1]
    s12 = joint.cov[:m1, m1:]
    s21 = joint.cov[m1:, :m1]
    s22 = joint.cov[m1:, m1:]
    s11_inv = sym_pinv(s11)
    mean = joint.mean[m1:] + s21 @ s11_inv @ (x1 - joint.mean[:m1])
    cov = s22 - s21 @ s11_inv @ s12
    return GaussianParams(mean, 0.5 * (cov + cov.T))


def sample_psd(g: GaussianParams, rng: np.random.Generator) -> np.ndarray:
    """Draw one sample from a Gaussian whose covariance may be singular.

    Uses the symmetric eigendecomposition E D E^T of the covariance, clips
    negative eigenvalues (round-off) to zero, and returns mean + E sqrt(D) z
    with z standard normal. Deterministic given the generator state.
    """
    w, v = np.linalg.eigh(g.cov)
    w = np.clip(w, 0.0, None)
    z = rng.standard_normal(g.dim)
    return g.mean + v @ (np.sqrt(w) * z)
