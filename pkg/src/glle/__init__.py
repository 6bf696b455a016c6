"""Locally linear embedding with generative weight sampling.

Deterministic LLE plus two ways of drawing reconstruction-weight ensembles
(an EM-fitted latent model and direct sampling around the LLE weights),
synthetic 3-D manifolds to run them on, and metrics for comparing the
resulting embeddings.
"""

from .datasets import (
    Dataset,
    gen_s_curve,
    gen_severed_bowl,
    gen_swiss_roll,
    load_csv,
    save_csv,
)
from .direct import DirectParams, conditional_mean, gamma, run_direct, sample_direct_weights
from .em import (
    EmState,
    EmTrace,
    compute_scatters,
    data_mean,
    e_step,
    full_cov_gradient,
    m_step_sigma,
    run_em,
    sample_weights,
)
from .errors import CsvError, NumericalError, SingularMatrixError
from .gaussian import GaussianParams, condition, log_pdf, sample_psd
from .lle import (
    Embedding,
    WeightMatrix,
    embed,
    embedding_matrix,
    lle_pipeline,
    local_gram,
    reconstruct_all,
    scatter_weights,
    solve_weights,
)
from .metrics import ComparisonReport, neighborhood_preservation, procrustes_residual
from .neighbors import NeighborhoodGraph, build_knn, neighbor_matrix
from .svg import render_svg

__version__ = "0.1.0"

__all__ = [
    "ComparisonReport",
    "CsvError",
    "Dataset",
    "DirectParams",
    "Embedding",
    "EmState",
    "EmTrace",
    "GaussianParams",
    "NeighborhoodGraph",
    "NumericalError",
    "SingularMatrixError",
    "WeightMatrix",
    "build_knn",
    "compute_scatters",
    "condition",
    "conditional_mean",
    "data_mean",
    "e_step",
    "embed",
    "embedding_matrix",
    "full_cov_gradient",
    "gamma",
    "gen_s_curve",
    "gen_severed_bowl",
    "gen_swiss_roll",
    "lle_pipeline",
    "load_csv",
    "local_gram",
    "log_pdf",
    "m_step_sigma",
    "neighbor_matrix",
    "neighborhood_preservation",
    "procrustes_residual",
    "reconstruct_all",
    "render_svg",
    "run_direct",
    "run_em",
    "sample_direct_weights",
    "sample_psd",
    "sample_weights",
    "save_csv",
    "scatter_weights",
    "solve_weights",
]
