"""Transport and recurrence observables computed from probability grids.

Distances are measured in spacing units: one lattice step per axis,
regardless of the physical horizontal/vertical pitch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evolution import EvolutionTrace, ProbabilityGrid
from .lattice import Lattice


@dataclass(frozen=True)
class ObservableSeries:
    z_values: np.ndarray
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        z = np.asarray(self.z_values, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if z.shape != v.shape:
            raise ValueError(f"{len(z)} z values but {len(v)} series values")
        object.__setattr__(self, "z_values", z)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.z_values)

    def window(self, z_min: float, z_max: float) -> "ObservableSeries":
        keep = (self.z_values >= z_min) & (self.z_values <= z_max)
        return ObservableSeries(self.z_values[keep], self.values[keep], self.name)


@dataclass(frozen=True)
class PolyaEstimate:
    value: float
    terms_used: int
    sample_period: float


def _values(grid) -> np.ndarray:
    v = grid.values if isinstance(grid, ProbabilityGrid) else np.asarray(grid, dtype=float)
    return v.reshape(1, -1) if v.ndim == 1 else v


def _resolve_origin(lattice: Lattice, origin) -> tuple[int, int]:
    if origin is None or origin == "center":
        return lattice.center
    r, c = origin
    lattice.index(r, c)
    return int(r), int(c)


def squared_distance_units(lattice: Lattice, origin=None) -> np.ndarray:
    """``(rows, cols)`` array of squared spacing-unit distances to ``origin``."""
    r0, c0 = _resolve_origin(lattice, origin)
    rr, cc = np.indices(lattice.shape)
    return ((rr - r0) ** 2 + (cc - c0) ** 2).astype(float)


def variance(grid, lattice: Lattice, origin=None) -> float:
    p = _values(grid)
    if p.shape != lattice.shape:
        raise ValueError(f"grid shape {p.shape} does not match lattice {lattice.shape}")
    total = p.sum()
    if total <= 0:
        raise ValueError("variance undefined for a grid with zero total probability")
    return float((squared_distance_units(lattice, origin) * p).sum() / total)


def variance_series(trace: EvolutionTrace, lattice: Lattice, origin=None) -> ObservableSeries:
    vals = [variance(g, lattice, origin) for g in trace.grids]
    return ObservableSeries(trace.z_values, vals, "variance")


def similarity(g1, g2) -> float:
    """Overlap ``(sum sqrt(a b))^2 / (sum a * sum b)``; 1 iff the
    normalised distributions coincide."""
    a, b = _values(g1), _values(g2)
    if a.shape != b.shape:
        raise ValueError(f"grid shapes differ: {a.shape} vs {b.shape}")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("similarity requires non-negative grids")
    sa, sb = a.sum(), b.sum()
    if sa <= 0 or sb <= 0:
        raise ValueError("similarity requires grids with positive total")
    return float(np.sqrt(a * b).sum() ** 2 / (sa * sb))


def projections(grid, lattice: Lattice | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Column sums (x profile) and row sums (y profile)."""
    p = _values(grid)
    if lattice is not None and p.shape != lattice.shape:
        raise ValueError(f"grid shape {p.shape} does not match lattice {lattice.shape}")
    return p.sum(axis=0), p.sum(axis=1)


def return_probability(trace: EvolutionTrace, origin, lattice: Lattice | None = None) -> ObservableSeries:
    if lattice is not None:
        r, c = _resolve_origin(lattice, origin)
    elif origin is None or origin == "center":
        rows, cols = trace.grids[0].shape
        r, c = rows // 2, cols // 2
    else:
        r, c = origin
    vals = [g.values[r, c] for g in trace.grids]
    return ObservableSeries(trace.z_values, vals, "p0")


def edge_probability(grid, width: int = 2) -> float:
    """Probability held by sites within ``width`` rows/cols of any edge.

    Only edges of extent > 1 count, so a 1 x N chain checks its two ends.
    """
    p = _values(grid)
    rows, cols = p.shape
    mask = np.zeros(p.shape, dtype=bool)
    if rows > 1:
        mask[:width, :] = True
        mask[-width:, :] = True
    if cols > 1:
        mask[:, :width] = True
        mask[:, -width:] = True
    return float(p[mask].sum())


def boundary_free_limit(trace: EvolutionTrace, width: int = 2, threshold: float = 0.01) -> float:
    """Largest z before the edge band first holds ``threshold`` probability."""
    last = None
    for z, g in zip(trace.z_values, trace.grids):
        if edge_probability(g, width) >= threshold:
            break
        last = float(z)
    if last is None:
        raise ValueError("walk touches the boundary at the first sample")
    return last


def _window(series: ObservableSeries, z_min: float, z_max: float, min_points: int) -> ObservableSeries:
    if z_min <= 0:
        raise ValueError("z_min must be > 0 for a log-log fit")
    if z_max <= z_min:
        raise ValueError("z_max must exceed z_min")
    win = series.window(z_min, z_max)
    if len(win) < min_points:
        raise ValueError(f"need at least {min_points} samples in [{z_min}, {z_max}], found {len(win)}")
    if np.any(win.values <= 0):
        raise ValueError("log-log fit requires strictly positive values")
    return win


def loglog_slope(series: ObservableSeries, z_min: float, z_max: float) -> float:
    win = _window(series, z_min, z_max, 5)
    slope, _ = np.polyfit(np.log(win.z_values), np.log(win.values), 1)
    return float(slope)


def local_maxima(values: np.ndarray) -> np.ndarray:
    """Interior indices ``i`` with ``v[i-1] < v[i] >= v[i+1]``."""
    v = np.asarray(values)
    if len(v) < 3:
        return np.array([], dtype=int)
    mid = v[1:-1]
    return np.nonzero((mid > v[:-2]) & (mid >= v[2:]))[0] + 1


def decay_exponent(series: ObservableSeries, z_min: float, z_max: float) -> float:
    """``d`` in ``P0 ~ z^-d``, fitted through the local maxima of the
    oscillating return probability inside the window."""
    win = _window(series, z_min, z_max, 5)
    idx = local_maxima(win.values)
    if len(idx) < 4:
        raise ValueError(
            f"envelope fit needs >= 4 local maxima in [{z_min}, {z_max}], found {len(idx)}; "
            "widen the window or sample z more densely"
        )
    slope, _ = np.polyfit(np.log(win.z_values[idx]), np.log(win.values[idx]), 1)
    return float(-slope)


def _sample_p0(p0: ObservableSeries, sample_period: float, max_terms: int) -> np.ndarray:
    if sample_period <= 0:
        raise ValueError("sample_period must be > 0")
    if max_terms < 1:
        raise ValueError("max_terms must be >= 1")
    if len(p0) == 0:
        raise ValueError("empty return-probability series")
    z_m = sample_period * np.arange(1, max_terms + 1)
    z = p0.z_values
    slack = 1e-9 * z_m[-1]
    if z[0] > z_m[0] + slack or z[-1] < z_m[-1] - slack:
        raise ValueError(
            f"series covers z in [{z[0]:g}, {z[-1]:g}] but {max_terms} terms of period "
            f"{sample_period:g} need [{z_m[0]:g}, {z_m[-1]:g}]"
        )
    vals = p0.values
    if np.any(vals < -1e-12) or np.any(vals > 1 + 1e-12):
        raise ValueError("return probabilities must lie in [0, 1]")
    return np.clip(np.interp(z_m, z, vals), 0.0, 1.0)


def polya_number(p0: ObservableSeries, sample_period: float = 0.5, max_terms: int = 100) -> PolyaEstimate:
    """``1 - prod_m (1 - P0(m * period))``, interpolating P0 linearly."""
    samples = _sample_p0(p0, sample_period, max_terms)
    value = 1.0 - float(np.prod(1.0 - samples))
    return PolyaEstimate(min(max(value, 0.0), 1.0), max_terms, sample_period)


def polya_series(p0: ObservableSeries, sample_period: float = 0.5, max_terms: int = 100) -> ObservableSeries:
    """Partial Polya numbers after each sampled term, against ``z_m``."""
    samples = _sample_p0(p0, sample_period, max_terms)
    partial = 1.0 - np.cumprod(1.0 - samples)
    z_m = sample_period * np.arange(1, max_terms + 1)
    return ObservableSeries(z_m, partial, "polya")
