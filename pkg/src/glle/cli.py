"""Command-line entry point: generate | embed | sweep | compare.

Every command is deterministic for fixed flags; files are written with fixed
formatting (17 significant digits, LF endings) so reruns are byte-identical.
Flag values win over config-file values, which win over defaults.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .datasets import (
    Dataset,
    gen_s_curve,
    gen_severed_bowl,
    gen_swiss_roll,
    load_csv,
    save_csv,
)
from .direct import DEFAULT_GAMMA_REG, run_direct
from .em import run_em
from .errors import CsvError, NumericalError, SingularMatrixError
from .lle import DEFAULT_REG, Embedding, embed, embedding_matrix, lle_pipeline, scatter_weights
from .metrics import ComparisonReport, neighborhood_preservation, procrustes_residual, save_metrics_csv
from .neighbors import build_knn
from .svg import render_svg

METHODS = ("lle", "glle-em", "glle-direct")
DATASETS = ("s-curve", "swiss-roll", "swiss-roll-hole", "severed-bowl")
DEFAULT_SCALES = (0.01, 0.1, 1.0, 5.0, 10.0)


class UsageError(Exception):
    """Bad flags or config values; maps to exit code 2."""


@dataclass
class RunConfig:
    """Resolved parameters for one command."""

    command: str
    method: str = "lle"
    dataset: str = "swiss-roll"
    input: str | None = None
    out: str | None = None
    out_dir: str = "."
    n: int = 1000
    k: int = 10
    p: int = 2
    seed: int = 0
    scale: float = 1.0
    scales: tuple = DEFAULT_SCALES
    generations: int = 1
    reg: float = DEFAULT_REG
    tol: float = 1e-6
    max_iter: int = 100


_INT_KEYS = {"n", "k", "p", "seed", "generations", "max_iter"}
_FLOAT_KEYS = {"scale", "reg", "tol"}
_STR_KEYS = {"method", "dataset", "input", "out", "out_dir"}


def _parse_scales(text: str) -> tuple:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip() != "")
    except ValueError:
        raise UsageError(f"bad --scales value: {text!r}") from None
    if not values:
        raise UsageError("--scales must list at least one value")
    return values


def _read_config_file(path: str) -> dict:
    """Parse a line-oriented key=value config file."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if line == "" or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}: line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key in _INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise UsageError(f"{path}: line {lineno}: {key} must be an integer") from None
        elif key in _FLOAT_KEYS:
            try:
                values[key] = float(value)
            except ValueError:
                raise UsageError(f"{path}: line {lineno}: {key} must be a number") from None
        elif key == "scales":
            values[key] = _parse_scales(value)
        elif key in _STR_KEYS:
            values[key] = value
        else:
            raise UsageError(f"{path}: line {lineno}: unknown key {key!r}")
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glle",
        description="Locally linear embedding with generative weight sampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--dataset", choices=DATASETS)
        sp.add_argument("--in", dest="input", help="read the dataset from this CSV")
        sp.add_argument("--out-dir", dest="out_dir")
        sp.add_argument("--method", choices=METHODS)
        sp.add_argument("--k", type=int)
        sp.add_argument("--p", type=int)
        sp.add_argument("--n", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--scale", type=float)
        sp.add_argument("--generations", type=int)
        sp.add_argument("--reg", type=float, help="weight-solve regularization")
        sp.add_argument("--tol", type=float)
        sp.add_argument("--max-iter", dest="max_iter", type=int)
        sp.add_argument("--config", help="key=value file supplying flag defaults")

    gen = sub.add_parser("generate", help="write a synthetic dataset CSV")
    add_common(gen)
    gen.add_argument("--out", help="output CSV path")

    emb = sub.add_parser("embed", help="embed a dataset, one run per generation")
    add_common(emb)

    swp = sub.add_parser("sweep", help="embed at several sampling-covariance scales")
    add_common(swp)
    swp.add_argument("--scales", type=str, help="comma-separated scale list")

    cmp_ = sub.add_parser("compare", help="compare generations against deterministic LLE")
    add_common(cmp_)
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    file_values = _read_config_file(args.config) if getattr(args, "config", None) else {}
    cfg = RunConfig(command=args.command)
    for key in (
        "method dataset input out out_dir n k p seed scale generations reg tol max_iter"
    ).split():
        flag = getattr(args, key, None)
        if flag is not None:
            setattr(cfg, key, flag)
        elif key in file_values:
            setattr(cfg, key, file_values[key])
    scales_flag = getattr(args, "scales", None)
    if scales_flag is not None:
        cfg.scales = _parse_scales(scales_flag)
    elif "scales" in file_values:
        cfg.scales = file_values["scales"]

    if cfg.method not in METHODS:
        raise UsageError(f"method must be one of {', '.join(METHODS)}")
    if cfg.input is None and cfg.dataset not in DATASETS:
        raise UsageError(f"dataset must be one of {', '.join(DATASETS)} or use --in")
    if cfg.n < 1:
        raise UsageError("n must be at least 1")
    if cfg.k < 1:
        raise UsageError("k must be at least 1")
    if cfg.p < 1:
        raise UsageError("p must be at least 1")
    if cfg.generations < 1:
        raise UsageError("generations must be at least 1")
    if cfg.scale <= 0 or any(s <= 0 for s in cfg.scales):
        raise UsageError("scales must be positive")
    if cfg.reg < 0:
        raise UsageError("reg must be non-negative")
    if cfg.tol <= 0:
        raise UsageError("tol must be positive")
    if cfg.max_iter < 1:
        raise UsageError("max-iter must be at least 1")
    return cfg


def _get_dataset(cfg: RunConfig) -> Dataset:
    if cfg.input is not None:
        return load_csv(cfg.input)
    if cfg.dataset == "s-curve":
        return gen_s_curve(cfg.n, cfg.seed)
    if cfg.dataset == "swiss-roll":
        return gen_swiss_roll(cfg.n, with_hole=False, seed=cfg.seed)
    if cfg.dataset == "swiss-roll-hole":
        return gen_swiss_roll(cfg.n, with_hole=True, seed=cfg.seed)
    return gen_severed_bowl(cfg.n, cfg.seed)


def _run_method(ds: Dataset, cfg: RunConfig, method_seed: int, scale: float) -> Embedding:
    """One embedding run of the configured method at the given seed and scale."""
    if cfg.method == "lle":
        emb, _ = lle_pipeline(ds, cfg.k, cfg.p, cfg.reg)
        return emb
    graph = build_knn(ds, cfg.k)
    if cfg.method == "glle-em":
        weights, _, _ = run_em(
            ds,
            graph,
            max_iter=cfg.max_iter,
            tol=cfg.tol,
            seed=method_seed,
            scale=scale,
        )
    else:
        weights, _, _ = run_direct(
            ds, cfg.k, cfg.p, seed=method_seed, scale=scale, lle_reg=cfg.reg
        )
    M = embedding_matrix(scatter_weights(weights, graph))
    return embed(M, cfg.p)


def _save_embedding_csv(emb: Embedding, param: np.ndarray, path: str) -> None:
    p = emb.coords.shape[1]
    header = ",".join([f"y{j}" for j in range(p)] + ["param"])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for i in range(emb.coords.shape[0]):
            fields = [f"{v:.17g}" for v in emb.coords[i]] + [f"{param[i]:.17g}"]
            fh.write(",".join(fields) + "\n")


def cmd_generate(cfg: RunConfig) -> int:
    ds = _get_dataset(cfg)
    out = cfg.out or os.path.join(cfg.out_dir, f"{ds.name}.csv")
    save_csv(ds, out)
    print(f"wrote {out} ({ds.n} points)")
    return 0


def cmd_embed(cfg: RunConfig) -> int:
    ds = _get_dataset(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    reference, _ = lle_pipeline(ds, cfg.k, cfg.p, cfg.reg)
    rows = []
    for g in range(cfg.generations):
        method_seed = cfg.seed + g
        emb = _run_method(ds, cfg, method_seed, cfg.scale)
        base = os.path.join(cfg.out_dir, f"embedding_{cfg.method}_g{g}")
        _save_embedding_csv(emb, ds.param, base + ".csv")
        render_svg(emb, ds.param, base + ".svg")
        rows.append(
            {
                "method": cfg.method,
                "seed": method_seed,
                "scale": cfg.scale,
                "preservation": neighborhood_preservation(ds, emb, cfg.k),
                "procrustes_vs_lle": procrustes_residual(reference.coords, emb.coords),
            }
        )
        print(f"generation {g}: wrote {base}.csv and {base}.svg")
    save_metrics_csv(os.path.join(cfg.out_dir, "metrics.csv"), rows)
    print(f"wrote {os.path.join(cfg.out_dir, 'metrics.csv')}")
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    ds = _get_dataset(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    reference, _ = lle_pipeline(ds, cfg.k, cfg.p, cfg.reg)
    rows = []
    for scale in cfg.scales:
        emb = _run_method(ds, cfg, cfg.seed, scale)
        base = os.path.join(cfg.out_dir, f"embedding_{cfg.method}_scale_{scale:g}")
        _save_embedding_csv(emb, ds.param, base + ".csv")
        render_svg(emb, ds.param, base + ".svg")
        rows.append(
            {
                "method": cfg.method,
                "seed": cfg.seed,
                "scale": scale,
                "preservation": neighborhood_preservation(ds, emb, cfg.k),
                "procrustes_vs_lle": procrustes_residual(reference.coords, emb.coords),
            }
        )
        print(f"scale {scale:g}: wrote {base}.csv and {base}.svg")
    save_metrics_csv(os.path.join(cfg.out_dir, "metrics.csv"), rows)
    print(f"wrote {os.path.join(cfg.out_dir, 'metrics.csv')}")
    return 0


def cmd_compare(cfg: RunConfig) -> ComparisonReport:
    if cfg.method == "lle":
        raise UsageError("compare needs a generative method (glle-em or glle-direct)")
    ds = _get_dataset(cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    reference, _ = lle_pipeline(ds, cfg.k, cfg.p, cfg.reg)
    rows = []
    per_generation = []
    for g in range(cfg.generations):
        method_seed = cfg.seed + g
        emb = _run_method(ds, cfg, method_seed, cfg.scale)
        preservation = neighborhood_preservation(ds, emb, cfg.k)
        residual = procrustes_residual(reference.coords, emb.coords)
        per_generation.append((method_seed, preservation))
        rows.append(
            {
                "method": cfg.method,
                "seed": method_seed,
                "scale": cfg.scale,
                "preservation": preservation,
                "procrustes_vs_lle": residual,
            }
        )
        print(
            f"generation {g}: preservation={preservation:.4f} "
            f"procrustes_vs_lle={residual:.6f}"
        )
    save_metrics_csv(os.path.join(cfg.out_dir, "metrics.csv"), rows)
    print(f"wrote {os.path.join(cfg.out_dir, 'metrics.csv')}")
    return ComparisonReport(
        neighborhood_preservation=float(np.mean([r["preservation"] for r in rows])),
        procrustes_residual=float(np.mean([r["procrustes_vs_lle"] for r in rows])),
        per_generation=per_generation,
    )


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        # Pin BLAS to one thread for the whole command so outputs are
        # byte-identical regardless of the host's thread configuration.
        with threadpool_limits(limits=1):
            if cfg.command == "generate":
                cmd_generate(cfg)
            elif cfg.command == "embed":
                cmd_embed(cfg)
            elif cfg.command == "sweep":
                cmd_sweep(cfg)
            else:
                cmd_compare(cfg)
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SingularMatrixError, NumericalError, CsvError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
