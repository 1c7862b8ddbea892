"""Propagation ``psi(z) = exp(-i H z) psi(0)`` and site probabilities.

Two independent routes are provided: a dense Hermitian eigendecomposition
(reused across all z of a trace) and an adaptive Lanczos/Krylov propagator
working only with sparse matrix-vector products.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .hamiltonian import Hamiltonian
from .lattice import Lattice


class EvolutionError(RuntimeError):
    """Base class for numerical propagation failures."""


class EigendecompositionError(EvolutionError):
    pass


class KrylovConvergenceError(EvolutionError):
    pass


BACKENDS = ("spectral", "krylov")
_SPECTRAL_CHUNK = 32


@dataclass(frozen=True)
class ProbabilityGrid:
    """Site probabilities arranged as a ``(rows, cols)`` array."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v.reshape(1, -1)
        if v.ndim != 2:
            raise ValueError(f"grid must be 2-D, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def total(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True)
class EvolutionTrace:
    z_values: np.ndarray
    grids: tuple[ProbabilityGrid, ...]

    def __post_init__(self):
        z = np.asarray(self.z_values, dtype=float).ravel()
        grids = tuple(self.grids)
        if len(z) != len(grids):
            raise ValueError(f"{len(z)} z values but {len(grids)} grids")
        if len(z) and (z[0] < 0 or np.any(np.diff(z) <= 0)):
            raise ValueError("z_values must be non-negative and strictly increasing")
        z.setflags(write=False)
        object.__setattr__(self, "z_values", z)
        object.__setattr__(self, "grids", grids)

    def __len__(self) -> int:
        return len(self.z_values)

    def stack(self) -> np.ndarray:
        """``(nz, rows, cols)`` array of all grids."""
        return np.stack([g.values for g in self.grids])


def initial_state(lattice: Lattice, site: tuple[int, int] | str = "center") -> np.ndarray:
    """Single-site excitation; ``"center"`` picks ``(rows // 2, cols // 2)``."""
    if isinstance(site, str):
        if site != "center":
            raise ValueError(f"unknown injection site {site!r}")
        site = lattice.center
    psi = np.zeros(lattice.n_sites, dtype=complex)
    psi[lattice.index(*site)] = 1.0
    return psi


def _check_inputs(h: Hamiltonian, psi0, z: float) -> np.ndarray:
    psi0 = np.asarray(psi0, dtype=complex).ravel()
    if psi0.shape[0] != h.n:
        raise ValueError(f"state has {psi0.shape[0]} amplitudes, Hamiltonian has {h.n} sites")
    if not np.isfinite(z) or z < 0:
        raise ValueError(f"propagation length must be finite and >= 0, got {z!r}")
    return psi0


def evolve_spectral(h: Hamiltonian, psi0, z: float) -> np.ndarray:
    psi0 = _check_inputs(h, psi0, z)
    if z == 0:
        return psi0.copy()
    w, v = h.eigh
    return v @ (np.exp(-1j * w * z) * (v.T @ psi0))


def _lanczos(matvec, v0: np.ndarray, m: int, scale: float):
    """``m``-step Lanczos with full reorthogonalisation.

    Returns the basis (n, k), diagonal, off-diagonal and the residual
    coupling ``beta_k``; ``k < m`` on an invariant subspace.
    """
    n = v0.shape[0]
    basis = np.zeros((n, m), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    basis[:, 0] = v0
    for j in range(m):
        w = matvec(basis[:, j])
        alpha[j] = np.vdot(basis[:, j], w).real
        w = w - alpha[j] * basis[:, j]
        if j > 0:
            w = w - beta[j - 1] * basis[:, j - 1]
        # two passes of Gram-Schmidt against the whole basis
        for _ in range(2):
            w = w - basis[:, : j + 1] @ (basis[:, : j + 1].conj().T @ w)
        beta[j] = np.linalg.norm(w)
        if beta[j] <= 1e-13 * max(scale, 1.0):
            return basis[:, : j + 1], alpha[: j + 1], beta[:j], 0.0
        if j + 1 < m:
            basis[:, j + 1] = w / beta[j]
    return basis, alpha, beta[: m - 1], beta[m - 1]


def evolve_krylov(
    h: Hamiltonian,
    psi0,
    z: float,
    max_subspace: int = 30,
    tol: float = 1e-10,
    max_steps: int = 100_000,
) -> np.ndarray:
    """Adaptive Lanczos approximation of ``exp(-i H z) psi0``.

    The interval is split into sub-steps; each sub-step is accepted when
    ``beta_m * |e_m^T exp(-i T_m tau) e_1|`` is below its share
    ``tol * tau / z`` of the error budget, otherwise the step is halved.
    """
    psi0 = _check_inputs(h, psi0, z)
    if max_subspace < 2:
        raise ValueError("max_subspace must be >= 2")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if z == 0:
        return psi0.copy()

    a = h.sparse
    matvec = a.dot
    scale = float(abs(a).sum(axis=1).max()) if h.n else 0.0
    m = min(max_subspace, h.n)

    psi = psi0.copy()
    done = 0.0
    tau = z
    steps = 0
    while done < z:
        tau = min(tau, z - done)
        norm = np.linalg.norm(psi)
        if norm == 0:
            return psi
        basis, alpha, offdiag, resid = _lanczos(matvec, psi / norm, m, scale)
        t = np.diag(alpha) + np.diag(offdiag, 1) + np.diag(offdiag, -1)
        while True:
            steps += 1
            if steps > max_steps:
                raise KrylovConvergenceError(
                    f"no convergence after {max_steps} sub-steps at z={done:.6g} of {z:.6g}"
                )
            # Pade expm keeps the tiny last entry relatively accurate, which
            # an eigenvector round trip does not
            coeffs = scipy.linalg.expm(-1j * tau * t)[:, 0]
            err = resid * abs(coeffs[-1]) * norm
            if err <= tol * tau / z or resid == 0.0:
                break
            tau *= 0.5
            if tau < z * 1e-14:
                raise KrylovConvergenceError(f"step size underflow at z={done:.6g}")
        psi = norm * (basis @ coeffs)
        done += tau
        # err/budget scales like tau^(m-2); grow at most 2x per step
        budget = tol * tau / z
        if err > 0 and len(alpha) > 2:
            tau *= min(2.0, max(1.0, 0.9 * (budget / err) ** (1.0 / (len(alpha) - 2))))
        else:
            tau *= 2.0
    return psi


def probabilities(psi, shape: tuple[int, int] | None = None) -> ProbabilityGrid:
    psi = np.asarray(psi).ravel()
    p = (psi.real**2 + psi.imag**2) if np.iscomplexobj(psi) else psi**2
    return ProbabilityGrid(p.reshape(shape) if shape is not None else p)


def _grid_shape(h: Hamiltonian) -> tuple[int, int]:
    return h.lattice.shape if h.lattice is not None else (1, h.n)


def evolve(h: Hamiltonian, psi0, z: float, backend: str = "spectral", **krylov_opts) -> np.ndarray:
    if backend == "spectral":
        return evolve_spectral(h, psi0, z)
    if backend == "krylov":
        return evolve_krylov(h, psi0, z, **krylov_opts)
    raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")


def evolve_trace(
    h: Hamiltonian,
    psi0,
    z_values: Sequence[float],
    backend: str = "spectral",
    threads: int = 1,
    **krylov_opts,
) -> EvolutionTrace:
    """Probability grids at every requested z.

    Samples are independent, so ``threads > 1`` evaluates them in a pool;
    output order always follows ``z_values``.
    """
    z = np.asarray(z_values, dtype=float).ravel()
    if len(z) and (z[0] < 0 or np.any(np.diff(z) <= 0)):
        raise ValueError("z_values must be non-negative and strictly increasing")
    shape = _grid_shape(h)
    if backend == "spectral":
        psi0 = _check_inputs(h, psi0, 0.0)
        w, v = h.eigh  # decompose once, before any worker touches it
        coeffs = v.T @ psi0
        # fixed chunks (independent of threads) keep the output bit-stable
        chunks = [z[i : i + _SPECTRAL_CHUNK] for i in range(0, len(z), _SPECTRAL_CHUNK)]

        def block(zc: np.ndarray) -> list[ProbabilityGrid]:
            psi = v @ (np.exp(-1j * np.outer(w, zc)) * coeffs[:, None])
            psi[:, zc == 0] = psi0[:, None]
            p = psi.real**2 + psi.imag**2
            return [ProbabilityGrid(p[:, k].reshape(shape)) for k in range(len(zc))]

        if threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(block, chunks))
        else:
            parts = [block(zc) for zc in chunks]
        return EvolutionTrace(z, tuple(g for part in parts for g in part))

    def one(zi: float) -> ProbabilityGrid:
        return probabilities(evolve(h, psi0, float(zi), backend, **krylov_opts), shape)

    if threads > 1 and len(z) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            grids = list(pool.map(one, z))
    else:
        grids = [one(zi) for zi in z]
    return EvolutionTrace(z, tuple(grids))
