"""Generative reconstruction weights fitted by expectation maximization.

Each point's weight vector is modeled as a zero-mean Gaussian latent variable
with isotropic prior covariance sigma_i I. The E-step computes the weight
posterior given the point, the M-step updates every sigma_i in closed form
from two global scatter matrices, and weights are then sampled from the
fitted posteriors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datasets import Dataset
from .errors import NumericalError
from .gaussian import PINV_CUTOFF, GaussianParams, sample_psd, sym_pinv
from .neighbors import NeighborhoodGraph, neighbor_matrix

# Floor applied to every M-step variance so posteriors stay well defined.
SIGMA_FLOOR = 1e-12

# Stream namespace tags for weight sampling (kept disjoint from dataset
# generation and from the direct-sampling module).
_STREAM_TAG_FINAL = 23
_STREAM_TAG_ITER = 29


@dataclass
class EmState:
    """Fitted per-point posterior parameters.

    Attributes:
        sigmas: (n,) prior variances, all positive.
        post_means: (n, k) posterior means of the weight vectors.
        post_covs: (n, k, k) posterior covariances (rank at most k - d).
        mu: (d,) global data mean.
        iteration: number of EM iterations performed.
    """

    sigmas: np.ndarray
    post_means: np.ndarray
    post_covs: np.ndarray
    mu: np.ndarray
    iteration: int


@dataclass
class EmTrace:
    """Per-iteration convergence record.

    objective holds the variational objective used for monotonicity checks:
    the expected log density of each point and its weights under the current
    weight posteriors, plus the entropy of those posteriors. expected_joint
    is the same quantity without the entropy term; it is kept as a diagnostic
    and is not monotone in general.
    """

    iterations: list[int] = field(default_factory=list)
    objectives: list[float] = field(default_factory=list)
    expected_joints: list[float] = field(default_factory=list)
    max_delta_sigmas: list[float] = field(default_factory=list)

    def append(self, iteration: int, objective: float, expected_joint: float, max_delta_sigma: float) -> None:
        self.iterations.append(iteration)
        self.objectives.append(objective)
        self.expected_joints.append(expected_joint)
        self.max_delta_sigmas.append(max_delta_sigma)


def data_mean(ds: Dataset) -> np.ndarray:
    """Mean of the data points."""
    return ds.points.mean(axis=0)


def _posterior(x: np.ndarray, X: np.ndarray, mu: np.ndarray, omega: np.ndarray):
    """Posterior mean and covariance of w given x under the joint Gaussian.

    The joint of [x, w] has mean [mu, 0] and covariance
    [[X Omega X^T, X Omega], [Omega X^T, Omega]]; conditioning on x gives
    mean Omega X^T pinv(X Omega X^T) (x - mu) and covariance
    Omega - Omega X^T pinv(X Omega X^T) X Omega.
    """
    A = X @ omega @ X.T
    A = 0.5 * (A + A.T)
    A_inv = sym_pinv(A)
    B = omega @ X.T @ A_inv
    mean = B @ (x - mu)
    cov = omega - B @ X @ omega
    return mean, 0.5 * (cov + cov.T)


def e_step(
    x: np.ndarray,
    X: np.ndarray,
    mu: np.ndarray,
    omega: np.ndarray,
    full_second_moment: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and second moment of a point's weight vector.

    Args:
        x: (d,) data point.
        X: (d, k) neighbor matrix.
        mu: (d,) data mean.
        omega: (k, k) PSD prior covariance of the weights.
        full_second_moment: when True (default), returns
            E[w w^T] = cov + mean mean^T; when False, returns the posterior
            covariance alone, reproducing the simplification some derivations
            use in the scatter updates.

    Returns:
        (mean, second_moment) with shapes (k,) and (k, k).
    """
    x = np.asarray(x, dtype=float)
    X = np.asarray(X, dtype=float)
    mu = np.asarray(mu, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if X.ndim != 2 or x.shape != (X.shape[0],) or mu.shape != x.shape:
        raise ValueError("x, mu must be (d,) and X must be (d, k)")
    k = X.shape[1]
    if omega.shape != (k, k):
        raise ValueError("omega must be (k, k)")
    mean, cov = _posterior(x, X, mu, omega)
    if full_second_moment:
        return mean, cov + np.outer(mean, mean)
    return mean, cov


def compute_scatters(
    ds: Dataset,
    graph: NeighborhoodGraph,
    mu: np.ndarray,
    e_step_outputs,
) -> tuple[np.ndarray, np.ndarray]:
    """Aggregate E-step outputs into the two M-step scatter matrices.

    Args:
        ds: dataset.
        graph: kNN graph over ds.
        mu: data mean.
        e_step_outputs: sequence of (mean, second_moment) pairs, one per point
            in index order.

    Returns:
        S1: (d, d) average of (x - mu)(x - mu)^T - 2 X E[w] (x - mu)^T
            + X E[w w^T] X^T over all points.
        S2: (k, k) average of E[w w^T].
    """
    n, d = ds.points.shape
    k = graph.k
    S1 = np.zeros((d, d))
    S2 = np.zeros((k, k))
    for i in range(n):
        mean, second = e_step_outputs[i]
        X = neighbor_matrix(graph, ds, i)
        xc = ds.points[i] - mu
        S1 += np.outer(xc, xc) - 2.0 * np.outer(X @ mean, xc) + X @ second @ X.T
        S2 += second
    S1 /= n
    S2 /= n
    return 0.5 * (S1 + S1.T), 0.5 * (S2 + S2.T)


def m_step_sigma(X: np.ndarray, S1: np.ndarray, S2: np.ndarray) -> float:
    """Closed-form update of one point's prior variance.

    sigma = (tr(pinv(X X^T) S1) + tr(S2)) / (d + k), floored at SIGMA_FLOOR.
    This is the maximizer of the isotropic-prior objective
    -(d + k)/2 log(sigma) - (tr(pinv(X X^T) S1) + tr(S2)) / (2 sigma).
    """
    X = np.asarray(X, dtype=float)
    d, k = X.shape
    sigma = (np.trace(sym_pinv(X @ X.T) @ S1) + np.trace(S2)) / (d + k)
    return float(max(sigma, SIGMA_FLOOR))


def full_cov_gradient(
    omega: np.ndarray, X: np.ndarray, S1: np.ndarray, S2: np.ndarray
) -> np.ndarray:
    """Gradient of the per-point joint objective with respect to inv(Omega).

    The objective (one point, constants dropped) is
        -1/2 [ log det(X Omega X^T) + tr(inv(X Omega X^T) S1)
               + log det(Omega) + tr(inv(Omega) S2) ].
    Writing A = X Omega X^T, the derivative with respect to inv(Omega) is
        1/2 [ Omega X^T inv(A) X Omega
              - Omega X^T inv(A) S1 inv(A) X Omega + Omega - S2 ].
    Implemented as a verified diagnostic; the production path keeps the
    isotropic relaxation.
    """
    omega = np.asarray(omega, dtype=float)
    X = np.asarray(X, dtype=float)
    k = omega.shape[0]
    if omega.shape != (k, k) or X.ndim != 2 or X.shape[1] != k:
        raise ValueError("omega must be (k, k) and X must be (d, k)")
    A = X @ omega @ X.T
    A_inv = sym_pinv(A)
    XtA = X.T @ A_inv
    term1 = omega @ XtA @ X @ omega
    term2 = omega @ XtA @ S1 @ XtA.T @ omega
    grad = 0.5 * (term1 - term2 + omega - S2)
    return 0.5 * (grad + grad.T)


def _pseudo_logdet_rank(a: np.ndarray) -> tuple[float, int]:
    """Log pseudo-determinant and rank of a symmetric PSD matrix."""
    w = np.linalg.eigvalsh(a)
    scale = np.abs(w).max() if w.size else 0.0
    keep = w > PINV_CUTOFF * scale
    if not keep.any():
        return 0.0, 0
    return float(np.log(w[keep]).sum()), int(keep.sum())


def _variational_objective(
    sigmas: np.ndarray,
    xxts: list[np.ndarray],
    S1: np.ndarray,
    S2: np.ndarray,
    post_covs: np.ndarray,
) -> tuple[float, float]:
    """Variational objective and its expected-joint part at the current fit.

    The expected-joint part sums, over points, the expected log density of
    [x_i, w_i] under the current weight posteriors, with the residual and
    weight second moments aggregated into the global scatters S1 and S2. The
    full objective adds the entropy of each posterior (via the pseudo
    determinant, since posterior covariances are rank deficient).
    """
    n = sigmas.size
    tr_s2 = float(np.trace(S2))
    expected = 0.0
    entropy = 0.0
    for i in range(n):
        ld_xx, rank_xx = _pseudo_logdet_rank(xxts[i])
        k = S2.shape[0]
        c_i = float(np.trace(sym_pinv(xxts[i]) @ S1)) + tr_s2
        expected += -0.5 * (
            (rank_xx + k) * np.log(sigmas[i])
            + ld_xx
            + c_i / sigmas[i]
            + (rank_xx + k) * np.log(2.0 * np.pi)
        )
        ld_cov, rank_cov = _pseudo_logdet_rank(post_covs[i])
        entropy += 0.5 * (rank_cov * np.log(2.0 * np.pi * np.e) + ld_cov)
    return expected + entropy, expected


def sample_weights(
    state: EmState,
    seed: int,
    scale: float = 1.0,
    graph_ref: str = "",
):
    """Sample one weight row per point from the fitted posteriors.

    Row i is drawn from a Gaussian with mean post_means[i] and covariance
    scale * post_covs[i], using a stream derived from (seed, i) so results do
    not depend on evaluation order.
    """
    from .lle import WeightMatrix

    if scale <= 0:
        raise ValueError("scale must be positive")
    n, k = state.post_means.shape
    rows = np.empty((n, k))
    for i in range(n):
        rng = np.random.default_rng([_STREAM_TAG_FINAL, seed, i])
        g = GaussianParams(state.post_means[i], scale * state.post_covs[i])
        rows[i] = sample_psd(g, rng)
    return WeightMatrix(rows=rows, graph_ref=graph_ref, constrained=False)


def run_em(
    ds: Dataset,
    graph: NeighborhoodGraph,
    max_iter: int = 100,
    tol: float = 1e-6,
    seed: int = 0,
    scale: float = 1.0,
    full_second_moment: bool = True,
    sample_every_iteration: bool = False,
):
    """Fit per-point weight distributions by EM and sample one weight row each.

    Starts from unit prior covariances, alternates the posterior computation
    with the closed-form variance update until max |delta sigma| < tol or
    max_iter, then samples w_i from the final posteriors (mean, scale * cov).
    When sample_every_iteration is set, a draw is also made inside each
    iteration, mirroring the loop order of the reference procedure; those
    draws never feed back into the fit, and the returned weights are
    identical in both modes.

    Returns:
        (WeightMatrix, EmState, EmTrace); the weight rows are unconstrained.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n, d = ds.points.shape
    k = graph.k
    mu = data_mean(ds)
    points = ds.points
    neighbors = [neighbor_matrix(graph, ds, i) for i in range(n)]
    xxts = [neighbors[i] @ neighbors[i].T for i in range(n)]

    sigmas = np.ones(n)
    trace = EmTrace()
    post_means = np.empty((n, k))
    post_covs = np.empty((n, k, k))
    identity = np.eye(k)
    iteration = 0
    for iteration in range(1, max_iter + 1):
        outputs = []
        for i in range(n):
            try:
                mean, cov = _posterior(points[i], neighbors[i], mu, sigmas[i] * identity)
            except np.linalg.LinAlgError as exc:
                raise NumericalError(f"iteration {iteration}, point {i}: {exc}") from None
            if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
                raise NumericalError(
                    f"iteration {iteration}, point {i}: non-finite posterior"
                )
            post_means[i] = mean
            post_covs[i] = cov
            if full_second_moment:
                outputs.append((mean, cov + np.outer(mean, mean)))
            else:
                outputs.append((mean, cov))
        if sample_every_iteration:
            for i in range(n):
                rng = np.random.default_rng([_STREAM_TAG_ITER, seed, iteration, i])
                sample_psd(GaussianParams(post_means[i], scale * post_covs[i]), rng)
        S1, S2 = compute_scatters(ds, graph, mu, outputs)
        objective, expected_joint = _variational_objective(
            sigmas, xxts, S1, S2, post_covs
        )
        new_sigmas = np.empty(n)
        for i in range(n):
            new_sigmas[i] = m_step_sigma(neighbors[i], S1, S2)
        if not np.all(np.isfinite(new_sigmas)):
            bad = int(np.flatnonzero(~np.isfinite(new_sigmas))[0])
            raise NumericalError(f"iteration {iteration}, point {bad}: non-finite sigma")
        delta = float(np.abs(new_sigmas - sigmas).max())
        trace.append(iteration, objective, expected_joint, delta)
        sigmas = new_sigmas
        if delta < tol:
            break
    # Refresh the posteriors at the final variances before sampling.
    for i in range(n):
        mean, cov = _posterior(points[i], neighbors[i], mu, sigmas[i] * identity)
        post_means[i] = mean
        post_covs[i] = cov
    state = EmState(
        sigmas=sigmas,
        post_means=post_means,
        post_covs=post_covs,
        mu=mu,
        iteration=iteration,
    )
    weights = sample_weights(state, seed, scale, graph_ref=graph.dataset_ref)
    return weights, state, trace


def save_trace_csv(trace: EmTrace, path: str) -> None:
    """Dump a convergence trace as CSV (iter, objective, max_delta_sigma)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iter,objective,expected_joint,max_delta_sigma\n")
        for it, obj, ej, ds_ in zip(
            trace.iterations, trace.objectives, trace.expected_joints, trace.max_delta_sigmas
        ):
            fh.write(f"{it},{obj:.17g},{ej:.17g},{ds_:.17g}\n")
