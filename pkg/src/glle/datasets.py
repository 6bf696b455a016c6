"""Synthetic 3-D manifolds and CSV round-tripping.

All generators draw every point from its own counter-based random stream, so
the output for a given (n, seed) is identical no matter how calls are batched
or parallelized.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import CsvError

# Stream namespace tag for dataset generation. Keeps generator draws disjoint
# from the weight-sampling streams used elsewhere in the package.
_STREAM_TAG = 11

# S-curve parameter ranges.
S_CURVE_T_MIN = -1.5 * math.pi
S_CURVE_T_MAX = 1.5 * math.pi
S_CURVE_U_MAX = 2.0

# Swiss roll parameter ranges.
SWISS_T_MIN = 1.5 * math.pi
SWISS_T_MAX = 4.5 * math.pi
SWISS_U_MAX = 21.0

# Centered rectangle rejected from (t, u) parameter space when the roll has a
# hole. Each side is sqrt(0.1) of the parameter range, so the hole covers 10%
# of the parameter area.
_HOLE_FRACTION = math.sqrt(0.1)
HOLE_T_HALF = 0.5 * _HOLE_FRACTION * (SWISS_T_MAX - SWISS_T_MIN)
HOLE_U_HALF = 0.5 * _HOLE_FRACTION * SWISS_U_MAX
HOLE_T_CENTER = 0.5 * (SWISS_T_MIN + SWISS_T_MAX)
HOLE_U_CENTER = 0.5 * SWISS_U_MAX

# Polar-angle cap of the severed bowl. Points are uniform on the unit sphere
# with polar angle in [0, BOWL_MAX_POLAR]; the band beyond the cap is removed.
BOWL_MAX_POLAR = 0.95 * (math.pi / 2.0)


@dataclass
class Dataset:
    """A point cloud with a scalar manifold coordinate per point.

    Attributes:
        points: (n, d) array of coordinates.
        param: (n,) intrinsic coordinate used for coloring plots.
        name: short label for file naming and reports.
    """

    points: np.ndarray
    param: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.param = np.asarray(self.param, dtype=float)
        if self.points.ndim != 2 or self.points.shape[0] < 1 or self.points.shape[1] < 1:
            raise ValueError("points must be a non-empty (n, d) array")
        if self.param.shape != (self.points.shape[0],):
            raise ValueError("param must have one entry per point")
        if not np.all(np.isfinite(self.points)) or not np.all(np.isfinite(self.param)):
            raise ValueError("coordinates must be finite")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def _point_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng([_STREAM_TAG, seed, i])


def gen_s_curve(n: int, seed: int) -> Dataset:
    """Sample n points from an S-shaped sheet in 3-D.

    The sheet is (sin t, u, sign(t) (cos t - 1)) with t uniform in
    [-3pi/2, 3pi/2] and u uniform in [0, 2]; t is stored as the param.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    points = np.empty((n, 3))
    param = np.empty(n)
    for i in range(n):
        rng = _point_rng(seed, i)
        t = rng.uniform(S_CURVE_T_MIN, S_CURVE_T_MAX)
        u = rng.uniform(0.0, S_CURVE_U_MAX)
        points[i] = (math.sin(t), u, math.copysign(1.0, t) * (math.cos(t) - 1.0))
        param[i] = t
    return Dataset(points, param, name="s-curve")


def gen_swiss_roll(n: int, with_hole: bool = False, seed: int = 0) -> Dataset:
    """Sample n points from a rolled-up sheet, optionally with a hole.

    The roll is (t cos t, u, t sin t) with t uniform in [3pi/2, 9pi/2] and u
    uniform in [0, 21]. With a hole, draws falling in a centered rectangle of
    (t, u) space covering 10% of the parameter area are rejected and redrawn
    from the same per-point stream.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    points = np.empty((n, 3))
    param = np.empty(n)
    for i in range(n):
        rng = _point_rng(seed, i)
        while True:
            t = rng.uniform(SWISS_T_MIN, SWISS_T_MAX)
            u = rng.uniform(0.0, SWISS_U_MAX)
            if not with_hole:
                break
            if abs(t - HOLE_T_CENTER) > HOLE_T_HALF or abs(u - HOLE_U_CENTER) > HOLE_U_HALF:
                break
        points[i] = (t * math.cos(t), u, t * math.sin(t))
        param[i] = t
    name = "swiss-roll-hole" if with_hole else "swiss-roll"
    return Dataset(points, param, name=name)


def gen_severed_bowl(n: int, seed: int) -> Dataset:
    """Sample n points uniformly from a unit-sphere cap forming an open bowl.

    The polar angle is capped at 0.95 * pi/2, which severs the band near the
    rim of the hemisphere. Area-uniform sampling draws cos(theta) uniformly.
    The polar angle is stored as the param.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    cos_cap = math.cos(BOWL_MAX_POLAR)
    points = np.empty((n, 3))
    param = np.empty(n)
    for i in range(n):
        rng = _point_rng(seed, i)
        c = rng.uniform(cos_cap, 1.0)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        s = math.sqrt(max(0.0, 1.0 - c * c))
        points[i] = (s * math.cos(phi), s * math.sin(phi), -c)
        param[i] = math.acos(c)
    return Dataset(points, param, name="severed-bowl")


def save_csv(ds: Dataset, path: str) -> None:
    """Write a dataset as CSV with header x0,...,x{d-1},param.

    Values are written with 17 significant digits so float64 coordinates
    survive a save/load round trip exactly.
    """
    header = ",".join([f"x{j}" for j in range(ds.d)] + ["param"])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for i in range(ds.n):
            fields = [f"{v:.17g}" for v in ds.points[i]] + [f"{ds.param[i]:.17g}"]
            fh.write(",".join(fields) + "\n")


def load_csv(path: str) -> Dataset:
    """Read a dataset written by save_csv.

    The column count of the header fixes the width; the last column is the
    param. Raises CsvError naming the 1-based line number of any ragged or
    non-numeric row.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CsvError(f"{path}: line 1: empty file")
    ncols = len(lines[0].split(","))
    if ncols < 2:
        raise CsvError(f"{path}: line 1: need at least one coordinate column plus param")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if line == "":
            continue
        fields = line.split(",")
        if len(fields) != ncols:
            raise CsvError(
                f"{path}: line {lineno}: expected {ncols} fields, got {len(fields)}"
            )
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise CsvError(f"{path}: line {lineno}: non-numeric field") from None
    if not rows:
        raise CsvError(f"{path}: line 2: no data rows")
    data = np.array(rows)
    name = os.path.splitext(os.path.basename(path))[0]
    return Dataset(data[:, :-1], data[:, -1], name=name)
