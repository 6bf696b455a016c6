"""Standalone SVG scatter plots colored by the manifold parameter."""

from __future__ import annotations

import numpy as np

from .lle import Embedding

VIEW = 800
MARGIN_FRACTION = 0.05
POINT_RADIUS = 3.0

# Anchor colors for the perceptual low-to-high ramp (dark purple to yellow).
_RAMP = (
    (0x44, 0x01, 0x54),
    (0x44, 0x39, 0x83),
    (0x31, 0x68, 0x8E),
    (0x21, 0x91, 0x8C),
    (0x35, 0xB7, 0x79),
    (0x90, 0xD7, 0x43),
    (0xFD, 0xE7, 0x25),
)


def ramp_color(t: float) -> str:
    """Hex color at position t in [0, 1] along the ramp (linear between anchors)."""
    t = min(max(float(t), 0.0), 1.0)
    pos = t * (len(_RAMP) - 1)
    lo = int(pos)
    hi = min(lo + 1, len(_RAMP) - 1)
    frac = pos - lo
    rgb = [round(_RAMP[lo][c] + frac * (_RAMP[hi][c] - _RAMP[lo][c])) for c in range(3)]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def render_svg(emb: Embedding, param: np.ndarray, path: str) -> None:
    """Write a 2-D embedding as an 800x800 SVG scatter.

    One circle per point, colored by param over its range, axes autoscaled to
    the data bounding box with 5% margins. Only p = 2 embeddings are plotted.
    """
    coords = np.asarray(emb.coords, dtype=float)
    param = np.asarray(param, dtype=float)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ValueError("only 2-D embeddings can be plotted")
    if param.shape != (coords.shape[0],):
        raise ValueError("param must have one entry per point")
    margin = MARGIN_FRACTION * VIEW
    span = VIEW - 2.0 * margin

    def axis_map(values: np.ndarray) -> np.ndarray:
        lo, hi = float(values.min()), float(values.max())
        if hi == lo:
            return np.full(values.shape, margin + 0.5 * span)
        return margin + (values - lo) / (hi - lo) * span

    xs = axis_map(coords[:, 0])
    # SVG y grows downward; flip so larger coordinates appear higher.
    ys = VIEW - axis_map(coords[:, 1])
    p_lo, p_hi = float(param.min()), float(param.max())
    if p_hi == p_lo:
        ts = np.full(param.shape, 0.5)
    else:
        ts = (param - p_lo) / (p_hi - p_lo)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{VIEW}" height="{VIEW}" '
        f'viewBox="0 0 {VIEW} {VIEW}">\n',
        f'<rect width="{VIEW}" height="{VIEW}" fill="white"/>\n',
    ]
    for i in range(coords.shape[0]):
        parts.append(
            f'<circle cx="{xs[i]:.2f}" cy="{ys[i]:.2f}" r="{POINT_RADIUS:g}" '
            f'fill="{ramp_color(ts[i])}"/>\n'
        )
    parts.append("</svg>\n")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(parts))
