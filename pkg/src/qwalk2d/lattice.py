"""Waveguide lattice geometry and the spacing-dependent coupling model.

Coordinates are in micrometres, couplings in inverse millimetres.
Sites are indexed row-major: ``index = row * cols + col`` and sit at
``(x, y) = (col * dh_um, row * dv_um)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

DEFAULT_DV_UM = 15.0
DEFAULT_DH_UM = 13.5
DEFAULT_CUTOFF_UM = 31.0
# placeholder fit values; measured chip constants are not available
DEFAULT_KAPPA = 0.2
DEFAULT_NEAREST_COUPLING = 0.1


@dataclass(frozen=True)
class CouplingModel:
    """Exponential fits ``C(d) = amp * exp(-kappa * d)`` per direction.

    ``amp_*`` in 1/mm, ``kappa_*`` in 1/um.
    """

    amp_h: float
    kappa_h: float
    amp_v: float
    kappa_v: float

    def __post_init__(self):
        for name in ("amp_h", "kappa_h", "amp_v", "kappa_v"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")

    @classmethod
    def uniform_nearest(
        cls,
        nearest: float = DEFAULT_NEAREST_COUPLING,
        kappa: float = DEFAULT_KAPPA,
        dh_um: float = DEFAULT_DH_UM,
        dv_um: float = DEFAULT_DV_UM,
    ) -> "CouplingModel":
        """Model whose horizontal (at ``dh_um``) and vertical (at ``dv_um``)
        nearest-neighbour couplings both equal ``nearest``."""
        return cls(
            amp_h=nearest * math.exp(kappa * dh_um),
            kappa_h=kappa,
            amp_v=nearest * math.exp(kappa * dv_um),
            kappa_v=kappa,
        )

    def horizontal(self, d_um: float) -> float:
        return self.amp_h * math.exp(-self.kappa_h * d_um)

    def vertical(self, d_um: float) -> float:
        return self.amp_v * math.exp(-self.kappa_v * d_um)


def _default_coupling() -> CouplingModel:
    return CouplingModel.uniform_nearest()


@dataclass(frozen=True)
class LatticeSpec:
    rows: int
    cols: int
    dv_um: float = DEFAULT_DV_UM
    dh_um: float = DEFAULT_DH_UM
    coupling: CouplingModel = field(default_factory=_default_coupling)
    cutoff_um: float = DEFAULT_CUTOFF_UM

    def __post_init__(self):
        for name in ("rows", "cols"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        for name in ("dv_um", "dh_um", "cutoff_um"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class Lattice:
    spec: LatticeSpec

    @property
    def rows(self) -> int:
        return self.spec.rows

    @property
    def cols(self) -> int:
        return self.spec.cols

    @property
    def n_sites(self) -> int:
        return self.spec.rows * self.spec.cols

    @property
    def shape(self) -> tuple[int, int]:
        return (self.spec.rows, self.spec.cols)

    @property
    def center(self) -> tuple[int, int]:
        return (self.spec.rows // 2, self.spec.cols // 2)

    @property
    def positions(self) -> np.ndarray:
        """(N, 2) array of ``(x_um, y_um)`` in flat-index order."""
        r, c = np.divmod(np.arange(self.n_sites), self.spec.cols)
        return np.column_stack([c * self.spec.dh_um, r * self.spec.dv_um])

    @property
    def extent_um(self) -> tuple[float, float]:
        """Width and height spanned by the site centres."""
        return ((self.cols - 1) * self.spec.dh_um, (self.rows - 1) * self.spec.dv_um)

    def index(self, row: int, col: int) -> int:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexError(f"site ({row}, {col}) outside {self.rows}x{self.cols} lattice")
        return row * self.cols + col

    def site(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.n_sites:
            raise IndexError(f"flat index {index} outside [0, {self.n_sites})")
        return divmod(index, self.cols)

    def position(self, row: int, col: int) -> tuple[float, float]:
        self.index(row, col)
        return (col * self.spec.dh_um, row * self.spec.dv_um)


def build_lattice(spec: LatticeSpec) -> Lattice:
    if not isinstance(spec, LatticeSpec):
        raise TypeError(f"expected LatticeSpec, got {type(spec).__name__}")
    return Lattice(spec)


def coupling_coefficient(model: CouplingModel, dx_um: float, dy_um: float) -> float:
    """Coupling between two waveguides separated by ``(dx_um, dy_um)``.

    Pure horizontal and pure vertical pairs use their own fit. Inclined
    pairs take the mean of both fits evaluated at the same distance.
    """
    if dx_um < 0 or dy_um < 0:
        raise ValueError("offsets must be non-negative")
    if dx_um == 0 and dy_um == 0:
        raise ValueError("coincident sites have no coupling (on-site term is beta)")
    d = math.hypot(dx_um, dy_um)
    if dy_um == 0:
        return model.horizontal(d)
    if dx_um == 0:
        return model.vertical(d)
    return 0.5 * (model.horizontal(d) + model.vertical(d))


def neighbor_pairs(lattice: Lattice) -> list[tuple[int, int, float]]:
    """All unordered site pairs ``(i, j, C_ij)`` with ``i < j`` and
    centre distance within the cutoff, sorted by ``(i, j)``."""
    spec = lattice.spec
    if lattice.n_sites < 2:
        return []
    tree = cKDTree(lattice.positions)
    # tiny slack so pairs sitting exactly on the cutoff survive round-off
    found = tree.query_pairs(spec.cutoff_um * (1 + 1e-12), output_type="ndarray")
    pairs = []
    for i, j in sorted(map(tuple, found.tolist())):
        ri, ci = divmod(i, spec.cols)
        rj, cj = divmod(j, spec.cols)
        dx = abs(ci - cj) * spec.dh_um
        dy = abs(ri - rj) * spec.dv_um
        if math.hypot(dx, dy) > spec.cutoff_um:
            continue
        pairs.append((i, j, coupling_coefficient(spec.coupling, dx, dy)))
    return pairs
