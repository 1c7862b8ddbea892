"""Command-line entry point: ``qwalk2d {run,render,observables,compare,validate}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .evolution import BACKENDS
from .heatmap import HeatmapStyle, render_heatmap
from .io import read_grid_csv, read_trace_dir, write_series_csv, z_tag
from .lattice import DEFAULT_DH_UM, DEFAULT_DV_UM, LatticeSpec, build_lattice
from .observables import (
    boundary_free_limit,
    decay_exponent,
    loglog_slope,
    polya_number,
    polya_series,
    return_probability,
    similarity,
    variance_series,
)
from .runner import MANIFEST, run_experiment

OUTPUT_ROOT_ENV = "QWALK2D_OUTPUT_ROOT"


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _default_out(config_path: Path, configured: str | None) -> Path:
    if configured:
        return Path(configured)
    root = os.environ.get(OUTPUT_ROOT_ENV, "runs")
    return Path(root) / config_path.stem


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _err(str(exc))
        return 2
    if args.backend:
        from dataclasses import replace

        cfg = replace(cfg, backend=args.backend)
    out = Path(args.out_dir) if args.out_dir else _default_out(Path(args.config), cfg.out_dir)
    result = run_experiment(cfg, out, threads=args.threads, svg=False if args.no_svg else None)
    if result.status != 0:
        _err(result.error)
        return 1
    print(f"wrote {len(result.files)} files to {result.out_dir}")
    for key, value in sorted(result.summary.items()):
        print(f"{key}: {json.dumps(value)}")
    return 0


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _err(str(exc))
        return 2
    spec = cfg.lattice
    print(
        f"{args.config}: ok ({spec.rows}x{spec.cols} lattice, {len(cfg.z_values)} z samples, "
        f"backend {cfg.backend})"
    )
    return 0


def _lattice_for(shape, dh: float, dv: float):
    return build_lattice(LatticeSpec(rows=shape[0], cols=shape[1], dh_um=dh, dv_um=dv))


def cmd_render(args) -> int:
    try:
        blocks = read_grid_csv(args.grid)
        style = HeatmapStyle(args.spot_sigma, args.canvas, args.colormap)
    except (OSError, ValueError, KeyError) as exc:
        _err(str(exc))
        return 2
    out = Path(args.out_dir) if args.out_dir else Path(args.grid).parent
    out.mkdir(parents=True, exist_ok=True)
    for z, grid in blocks:
        lattice = _lattice_for(grid.shape, args.dh_um, args.dv_um)
        path = out / f"heatmap_{z_tag(z)}.svg"
        path.write_text(render_heatmap(grid, lattice, style), encoding="utf-8")
        print(path)
    return 0


def cmd_compare(args) -> int:
    try:
        a = read_grid_csv(args.grid_a)
        b = read_grid_csv(args.grid_b)
        if len(a) != len(b):
            raise ValueError(f"files hold {len(a)} and {len(b)} grids")
        for (za, ga), (_, gb) in zip(a, b):
            s = similarity(ga, gb)
            print(repr(s) if len(a) == 1 else f"{za!r},{s!r}")
    except (OSError, ValueError) as exc:
        _err(str(exc))
        return 2
    return 0


def cmd_observables(args) -> int:
    """Recompute series from a directory of grid CSVs (a run directory or
    its ``grids/`` subdirectory)."""
    trace_dir = Path(args.trace_dir)
    run_dir = trace_dir if (trace_dir / MANIFEST).exists() else trace_dir.parent
    grid_dir = trace_dir / "grids" if (trace_dir / "grids").is_dir() else trace_dir
    try:
        trace = read_trace_dir(grid_dir)
    except (OSError, ValueError) as exc:
        _err(str(exc))
        return 2
    dh, dv, origin = args.dh_um, args.dv_um, None
    period, terms = args.sample_period, args.max_terms
    manifest = run_dir / MANIFEST
    if manifest.exists():
        cfg = json.loads(manifest.read_text(encoding="utf-8"))["config"]
        dh, dv = cfg["lattice"]["dh_um"], cfg["lattice"]["dv_um"]
        if cfg["injection"] != "center":
            origin = tuple(cfg["injection"])
    lattice = _lattice_for(trace.grids[0].shape, dh, dv)
    origin = origin or lattice.center

    out = Path(args.out_dir) if args.out_dir else run_dir / "reanalysis"
    out.mkdir(parents=True, exist_ok=True)
    var = variance_series(trace, lattice, origin)
    p0 = return_probability(trace, origin)
    write_series_csv(out / "variance.csv", var, "variance")
    write_series_csv(out / "p0.csv", p0, "p0")
    summary = {}
    try:
        positive = trace.z_values[trace.z_values > 0]
        z_lo, z_hi = float(positive[0]), boundary_free_limit(trace)
        summary["fit_window_mm"] = [z_lo, z_hi]
        summary["variance_slope"] = loglog_slope(var, z_lo, z_hi)
        summary["decay_exponent"] = decay_exponent(p0, z_lo, z_hi)
    except (ValueError, IndexError) as exc:
        summary["fit_note"] = str(exc)
    try:
        summary["polya"] = polya_number(p0, period, terms).value
        write_series_csv(out / "polya.csv", polya_series(p0, period, terms), "polya")
    except ValueError as exc:
        summary["polya_note"] = str(exc)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for key, value in sorted(summary.items()):
        print(f"{key}: {json.dumps(value)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qwalk2d", description="2D continuous-time quantum walks on waveguide lattices")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    p.add_argument("--backend", choices=BACKENDS)
    p.add_argument("--out-dir")
    p.add_argument("--no-svg", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a config without running it")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("render", help="render SVG heatmaps from a grid CSV")
    p.add_argument("grid")
    p.add_argument("--out-dir")
    p.add_argument("--dh-um", type=float, default=DEFAULT_DH_UM)
    p.add_argument("--dv-um", type=float, default=DEFAULT_DV_UM)
    p.add_argument("--spot-sigma", type=float, default=4.0)
    p.add_argument("--canvas", type=int, default=480)
    p.add_argument("--colormap", default="inferno")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("observables", help="recompute observables from a trace directory")
    p.add_argument("trace_dir")
    p.add_argument("--out-dir")
    p.add_argument("--dh-um", type=float, default=DEFAULT_DH_UM)
    p.add_argument("--dv-um", type=float, default=DEFAULT_DV_UM)
    p.add_argument("--sample-period", type=float, default=0.5)
    p.add_argument("--max-terms", type=int, default=100)
    p.set_defaults(func=cmd_observables)

    p = sub.add_parser("compare", help="print the similarity of two grid CSVs")
    p.add_argument("grid_a")
    p.add_argument("grid_b")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
