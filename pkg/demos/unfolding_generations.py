"""Draw several stochastic unfoldings of one manifold from a single EM fit.

The EM fit is deterministic; only the final weight draw consumes randomness.
Fitting once and sampling with different seeds therefore gives a family of
related embeddings cheaply. Writes one SVG per generation into demos/out/.
"""

import os

from glle.datasets import gen_s_curve
from glle.em import run_em, sample_weights
from glle.lle import embed, embedding_matrix, lle_pipeline, scatter_weights
from glle.metrics import neighborhood_preservation, procrustes_residual
from glle.neighbors import build_knn
from glle.svg import render_svg

N = 1000
K = 10
GENERATIONS = 4
OUT = os.path.join(os.path.dirname(__file__), "out")

ds = gen_s_curve(N, seed=0)
graph = build_knn(ds, K)

# deterministic reference for the alignment column
reference, _ = lle_pipeline(ds, K, 2)

_, state, trace = run_em(ds, graph, seed=0)
print(f"EM converged after {len(trace.objectives)} iterations")

os.makedirs(OUT, exist_ok=True)
print(f"{'generation':>10} {'preservation':>12} {'vs LLE':>10}")
for g in range(GENERATIONS):
    weights = sample_weights(state, seed=g, graph_ref=ds.name)
    emb = embed(embedding_matrix(scatter_weights(weights, graph)), 2)
    render_svg(emb, ds.param, os.path.join(OUT, f"em_generation_{g}.svg"))
    print(
        f"{g:>10} {neighborhood_preservation(ds, emb, K):>12.3f} "
        f"{procrustes_residual(reference.coords, emb.coords):>10.3f}"
    )
print(f"plots in {OUT}")
