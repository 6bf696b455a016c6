"""Embed each synthetic manifold with deterministic LLE and save the scatters.

Run from the repository root:

    python3 demos/dataset_gallery.py

Writes one SVG per dataset into demos/out/ and prints a small quality table.
"""

import os

from glle.datasets import gen_s_curve, gen_severed_bowl, gen_swiss_roll
from glle.lle import lle_pipeline
from glle.metrics import neighborhood_preservation
from glle.svg import render_svg

N = 1000
K = 10
OUT = os.path.join(os.path.dirname(__file__), "out")

datasets = {
    "s-curve": gen_s_curve(N, seed=0),
    "swiss-roll": gen_swiss_roll(N, seed=0),
    "swiss-roll-hole": gen_swiss_roll(N, with_hole=True, seed=0),
    "severed-bowl": gen_severed_bowl(N, seed=0),
}

os.makedirs(OUT, exist_ok=True)
print(f"{'dataset':<16} {'preservation':>12}")
for name, ds in datasets.items():
    emb, _ = lle_pipeline(ds, K, 2)
    path = os.path.join(OUT, f"lle_{name}.svg")
    render_svg(emb, ds.param, path)
    score = neighborhood_preservation(ds, emb, K)
    print(f"{name:<16} {score:>12.3f}")
print(f"plots in {OUT}")
