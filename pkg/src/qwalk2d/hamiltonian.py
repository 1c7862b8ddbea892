"""Single-excitation tight-binding Hamiltonian of a waveguide array."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .lattice import Lattice, neighbor_pairs


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """Real ``N x N`` matrix with ``beta`` on the diagonal and couplings
    ``C_ij`` (1/mm) off the diagonal.

    ``lattice`` is ``None`` for matrices assembled by hand.
    """

    matrix: np.ndarray
    beta: float = 0.0
    lattice: Lattice | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"Hamiltonian matrix must be square, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def sparse(self) -> sp.csr_matrix:
        return sp.csr_matrix(self.matrix)

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and orthonormal eigenvectors, computed once."""
        # local import keeps module layering one-way
        from .evolution import EigendecompositionError

        if not np.all(np.isfinite(self.matrix)):
            raise EigendecompositionError("Hamiltonian contains non-finite entries")
        try:
            w, v = np.linalg.eigh(self.matrix)
        except np.linalg.LinAlgError as exc:
            raise EigendecompositionError(f"eigendecomposition failed: {exc}") from exc
        w.setflags(write=False)
        v.setflags(write=False)
        return w, v

    def negated(self) -> "Hamiltonian":
        return Hamiltonian(-self.matrix, -self.beta, self.lattice)

    def offdiagonal_nnz(self) -> int:
        off = self.matrix.copy()
        np.fill_diagonal(off, 0.0)
        return int(np.count_nonzero(off))

    def to_csv(self, path: str | Path) -> None:
        """Dump nonzero entries as ``row,col,value`` triplets."""
        rows, cols = np.nonzero(self.matrix)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["row", "col", "value"])
            for r, c in zip(rows.tolist(), cols.tolist()):
                writer.writerow([r, c, repr(float(self.matrix[r, c]))])


def build_hamiltonian(lattice: Lattice, beta: float = 0.0) -> Hamiltonian:
    if not np.isfinite(beta):
        raise ValueError(f"beta must be finite, got {beta!r}")
    n = lattice.n_sites
    m = np.zeros((n, n))
    np.fill_diagonal(m, beta)
    for i, j, c in neighbor_pairs(lattice):
        m[i, j] = c
        m[j, i] = c
    return Hamiltonian(m, float(beta), lattice)


class HermiticityReport(NamedTuple):
    passed: bool
    max_asymmetry: float


def hermiticity_check(h: Hamiltonian | np.ndarray) -> HermiticityReport:
    m = h.matrix if isinstance(h, Hamiltonian) else np.asarray(h, dtype=float)
    asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    return HermiticityReport(asym == 0.0, asym)
