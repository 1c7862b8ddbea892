"""Report figures (matplotlib, non-interactive backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .observables import ObservableSeries  # noqa: E402

FIGSIZE = (5.0, 3.6)


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata={"Software": None})
    plt.close(fig)
    return path


def _positive(s: ObservableSeries):
    keep = (s.z_values > 0) & (s.values > 0)
    return s.z_values[keep], s.values[keep]


def plot_variance(curves: Mapping[str, ObservableSeries], path: str | Path) -> Path:
    """Log-log variance curves with slope-1 and slope-2 guides."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    zmin, zmax, vref = np.inf, 0.0, None
    for label, s in curves.items():
        z, v = _positive(s)
        if len(z) == 0:
            continue
        ax.loglog(z, v, "o-", ms=3, label=label)
        zmin, zmax = min(zmin, z[0]), max(zmax, z[-1])
        vref = v[-1] if vref is None else vref
    if zmax > 0 and np.isfinite(zmin):
        zz = np.array([zmin, zmax])
        ax.loglog(zz, vref * (zz / zmax) ** 2, "k--", lw=0.8, label="slope 2")
        ax.loglog(zz, vref * (zz / zmax), "k:", lw=0.8, label="slope 1")
    ax.set_xlabel("propagation length z (mm)")
    ax.set_ylabel(r"variance $\sigma^2$ (spacing units$^2$)")
    ax.legend(fontsize=8)
    return _save(fig, Path(path))


def plot_return_probability(curves: Mapping[str, ObservableSeries], path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for label, s in curves.items():
        z, v = _positive(s)
        ax.loglog(z, v, "-", lw=1, label=label)
    ax.set_xlabel("propagation length z (mm)")
    ax.set_ylabel(r"$P_0(z)$")
    ax.legend(fontsize=8)
    return _save(fig, Path(path))


def plot_polya(curves: Mapping[str, ObservableSeries], path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for label, s in curves.items():
        ax.plot(s.z_values, s.values, "-", lw=1.2, label=label)
    ax.set_ylim(0, 1.02)
    ax.set_xlabel("propagation length z (mm)")
    ax.set_ylabel("Polya number")
    ax.legend(fontsize=8)
    return _save(fig, Path(path))


def plot_projections(x_profile, y_profile, path: str | Path, title: str = "") -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(7.0, 3.0), sharey=True)
    ax1.bar(np.arange(len(x_profile)), x_profile, width=0.9)
    ax1.set_xlabel("column")
    ax1.set_ylabel("probability")
    ax2.bar(np.arange(len(y_profile)), y_profile, width=0.9, color="tab:orange")
    ax2.set_xlabel("row")
    if title:
        fig.suptitle(title, fontsize=9)
    return _save(fig, Path(path))
