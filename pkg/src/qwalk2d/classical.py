"""Classical continuous-time random walk on the same waveguide lattice.

Hopping rates equal the quantum couplings, so ``dp/dz = L p`` with
``L_ij = C_ij`` off the diagonal and columns closed to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .evolution import EigendecompositionError, EvolutionTrace, ProbabilityGrid
from .lattice import Lattice, neighbor_pairs
from .observables import squared_distance_units


@dataclass(frozen=True, eq=False)
class RateMatrix:
    entries: np.ndarray
    lattice: Lattice | None = None

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"rate matrix must be square, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        try:
            return np.linalg.eigh(self.entries)
        except np.linalg.LinAlgError as exc:
            raise EigendecompositionError(f"rate-matrix decomposition failed: {exc}") from exc


def build_rate_matrix(lattice: Lattice) -> RateMatrix:
    n = lattice.n_sites
    m = np.zeros((n, n))
    for i, j, c in neighbor_pairs(lattice):
        m[i, j] = c
        m[j, i] = c
    m[np.diag_indices(n)] = -m.sum(axis=0)
    return RateMatrix(m, lattice)


def evolve_classical(rates: RateMatrix, p0, z: float) -> np.ndarray:
    p0 = np.asarray(p0, dtype=float).ravel()
    if p0.shape[0] != rates.n:
        raise ValueError(f"distribution has {p0.shape[0]} entries, generator has {rates.n}")
    if np.any(p0 < 0) or abs(p0.sum() - 1.0) > 1e-10:
        raise ValueError("initial distribution must be non-negative and sum to 1")
    if not np.isfinite(z) or z < 0:
        raise ValueError(f"propagation length must be finite and >= 0, got {z!r}")
    if z == 0:
        return p0.copy()
    w, v = rates.eigh
    # eigenvalues are <= 0 up to round-off; clamp so exp never amplifies
    p = v @ (np.exp(np.minimum(w, 0.0) * z) * (v.T @ p0))
    if p.min() < -1e-10:
        raise EigendecompositionError(f"classical propagation lost positivity (min {p.min():.3g})")
    return np.clip(p, 0.0, None)


def classical_trace(rates: RateMatrix, p0, z_values: Sequence[float]) -> EvolutionTrace:
    shape = rates.lattice.shape if rates.lattice is not None else (1, rates.n)
    grids = [ProbabilityGrid(evolve_classical(rates, p0, float(z)).reshape(shape)) for z in z_values]
    return EvolutionTrace(np.asarray(z_values, dtype=float), tuple(grids))


def gaussian_reference(lattice: Lattice, sigma_units: float = 1.5, origin=None) -> ProbabilityGrid:
    """Normalised isotropic Gaussian in spacing units about ``origin``."""
    if not sigma_units > 0:
        raise ValueError("sigma_units must be > 0")
    g = np.exp(-squared_distance_units(lattice, origin) / (2.0 * sigma_units**2))
    return ProbabilityGrid(g / g.sum())
