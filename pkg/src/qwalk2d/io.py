"""CSV readers/writers for grids and series.

Floats are written with ``repr`` so a write/read cycle is exact and the
bytes do not depend on locale.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .evolution import EvolutionTrace, ProbabilityGrid
from .observables import ObservableSeries

GRID_HEADER = ["z", "row", "col", "probability"]


def _fmt(x) -> str:
    return repr(float(x))


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_grid_csv(path: str | Path, z: float, grid: ProbabilityGrid) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(GRID_HEADER)
        zs = _fmt(z)
        rows, cols = grid.shape
        vals = grid.values
        for r in range(rows):
            for c in range(cols):
                w.writerow([zs, r, c, _fmt(vals[r, c])])


def read_grid_csv(path: str | Path) -> list[tuple[float, ProbabilityGrid]]:
    """All ``(z, grid)`` blocks in the file, ordered by z."""
    blocks: dict[float, list[tuple[int, int, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != GRID_HEADER:
            raise ValueError(f"{path}: line 1: expected header {','.join(GRID_HEADER)!r}, got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                z, r, c, p = float(row[0]), int(row[1]), int(row[2]), float(row[3])
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}: line {lineno}: malformed grid row {row!r}") from exc
            blocks.setdefault(z, []).append((r, c, p))
    out = []
    for z in sorted(blocks):
        cells = blocks[z]
        rows = 1 + max(r for r, _, _ in cells)
        cols = 1 + max(c for _, c, _ in cells)
        arr = np.zeros((rows, cols))
        for r, c, p in cells:
            arr[r, c] = p
        out.append((z, ProbabilityGrid(arr)))
    return out


def read_trace_dir(directory: str | Path) -> EvolutionTrace:
    files = sorted(Path(directory).glob("*.csv"))
    if not files:
        raise ValueError(f"{directory}: no grid CSV files found")
    pairs = [item for f in files for item in read_grid_csv(f)]
    pairs.sort(key=lambda t: t[0])
    return EvolutionTrace(np.array([z for z, _ in pairs]), tuple(g for _, g in pairs))


def write_series_csv(path: str | Path, series: ObservableSeries, value_name: str = "value") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["z", value_name])
        for z, v in zip(series.z_values, series.values):
            w.writerow([_fmt(z), _fmt(v)])


def read_series_csv(path: str | Path) -> ObservableSeries:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [(float(a), float(b)) for a, b in reader]
    z, v = zip(*rows) if rows else ((), ())
    return ObservableSeries(np.array(z), np.array(v), header[1])


def write_projections_csv(path: str | Path, z: float, x_profile, y_profile) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["z", "axis", "index", "probability"])
        zs = _fmt(z)
        for i, v in enumerate(x_profile):
            w.writerow([zs, "x", i, _fmt(v)])
        for i, v in enumerate(y_profile):
            w.writerow([zs, "y", i, _fmt(v)])


def z_tag(z: float) -> str:
    """Filesystem-safe fixed-width label, e.g. ``z04.3100``."""
    return f"z{z:07.4f}"
