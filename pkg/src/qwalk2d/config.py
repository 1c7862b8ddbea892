"""JSON experiment configuration.

Example::

    {
      "lattice": {"rows": 49, "cols": 49, "cutoff_um": 31,
                  "coupling": {"nearest": 0.5, "kappa": 0.2}},
      "injection": "center",
      "z_values": {"start": 0.31, "stop": 9.81, "step": 0.5},
      "backend": "spectral",
      "observables": ["grids", "variance", "p0"],
      "classical": true
    }

``coupling`` accepts either the four fit parameters
(``amp_h``, ``kappa_h``, ``amp_v``, ``kappa_v``) or the shorthand
``{"nearest": C, "kappa": k}`` which equalises both nearest-neighbour
couplings at ``C``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .evolution import BACKENDS
from .heatmap import HeatmapStyle
from .lattice import (
    DEFAULT_CUTOFF_UM,
    DEFAULT_DH_UM,
    DEFAULT_DV_UM,
    CouplingModel,
    LatticeSpec,
)

OBSERVABLES = ("grids", "variance", "p0", "polya", "slope", "decay", "projections", "similarity")
DEFAULT_OBSERVABLES = ("grids", "variance", "p0", "projections")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = f"{source or '<config>'}:{line if line is not None else 1}"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class ExperimentConfig:
    lattice: LatticeSpec
    z_values: tuple[float, ...]
    injection: tuple[int, int] | str = "center"
    beta: float = 0.0
    backend: str = "spectral"
    krylov_subspace: int = 30
    krylov_tol: float = 1e-10
    observables: tuple[str, ...] = DEFAULT_OBSERVABLES
    classical: bool = False
    polya_period: float = 0.5
    polya_terms: int = 100
    window: tuple[float, float] | None = None
    heatmap: HeatmapStyle = field(default_factory=HeatmapStyle)
    svg: bool = True
    figures: bool = True
    out_dir: str | None = None

    def to_dict(self) -> dict[str, Any]:
        """Canonical JSON-ready form; ``parse_config`` round-trips it."""
        spec = self.lattice
        return {
            "lattice": {
                "rows": spec.rows,
                "cols": spec.cols,
                "dv_um": spec.dv_um,
                "dh_um": spec.dh_um,
                "cutoff_um": spec.cutoff_um,
                "coupling": asdict(spec.coupling),
            },
            "beta": self.beta,
            "injection": self.injection if isinstance(self.injection, str) else list(self.injection),
            "z_values": list(self.z_values),
            "backend": self.backend,
            "krylov": {"max_subspace": self.krylov_subspace, "tol": self.krylov_tol},
            "observables": list(self.observables),
            "classical": self.classical,
            "polya": {"sample_period": self.polya_period, "max_terms": self.polya_terms},
            "window": None if self.window is None else {"z_min": self.window[0], "z_max": self.window[1]},
            "heatmap": asdict(self.heatmap),
            "output": {"dir": self.out_dir, "svg": self.svg, "figures": self.figures},
        }


def _locate(text: str | None, key: str) -> int | None:
    if not text:
        return None
    needle = f'"{key}"'
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return lineno
    return None


class _Parser:
    def __init__(self, text: str | None, source: str | None):
        self.text = text
        self.source = source

    def fail(self, key: str, message: str):
        raise ConfigError(message, _locate(self.text, key), self.source)

    def number(self, obj: dict, key: str, default=None, positive=False, nonneg=False) -> float:
        if key not in obj:
            if default is None:
                self.fail(key, f"missing required key {key!r}")
            return default
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.fail(key, f"{key!r} must be a finite number, got {v!r}")
        if positive and v <= 0:
            self.fail(key, f"{key!r} must be > 0, got {v!r}")
        if nonneg and v < 0:
            self.fail(key, f"{key!r} must be >= 0, got {v!r}")
        return float(v)

    def integer(self, obj: dict, key: str, default=None, minimum=1) -> int:
        if key not in obj:
            if default is None:
                self.fail(key, f"missing required key {key!r}")
            return default
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
            self.fail(key, f"{key!r} must be an integer >= {minimum}, got {v!r}")
        return v

    def section(self, obj: dict, key: str) -> dict:
        v = obj.get(key, {})
        if v is None:
            return {}
        if not isinstance(v, dict):
            self.fail(key, f"{key!r} must be an object")
        return v

    def coupling(self, obj: dict, dh: float, dv: float) -> CouplingModel:
        if "coupling" not in obj:
            return CouplingModel.uniform_nearest(dh_um=dh, dv_um=dv)
        c = self.section(obj, "coupling")
        if "nearest" in c:
            return CouplingModel.uniform_nearest(
                self.number(c, "nearest", positive=True),
                self.number(c, "kappa", 0.2, positive=True),
                dh,
                dv,
            )
        return CouplingModel(
            *(self.number(c, k, positive=True) for k in ("amp_h", "kappa_h", "amp_v", "kappa_v"))
        )

    def lattice(self, root: dict) -> LatticeSpec:
        if "lattice" not in root:
            self.fail("lattice", "missing required key 'lattice'")
        lat = self.section(root, "lattice")
        dh = self.number(lat, "dh_um", DEFAULT_DH_UM, positive=True)
        dv = self.number(lat, "dv_um", DEFAULT_DV_UM, positive=True)
        return LatticeSpec(
            rows=self.integer(lat, "rows"),
            cols=self.integer(lat, "cols"),
            dv_um=dv,
            dh_um=dh,
            coupling=self.coupling(lat, dh, dv),
            cutoff_um=self.number(lat, "cutoff_um", DEFAULT_CUTOFF_UM, positive=True),
        )

    def z_values(self, root: dict) -> tuple[float, ...]:
        if "z_values" not in root:
            self.fail("z_values", "missing required key 'z_values'")
        zv = root["z_values"]
        if isinstance(zv, dict):
            start = self.number(zv, "start", nonneg=True)
            stop = self.number(zv, "stop", nonneg=True)
            step = self.number(zv, "step", positive=True)
            if stop < start:
                self.fail("stop", "z range stop must be >= start")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            z = tuple(float(x) for x in np.round(start + step * np.arange(n), 12))
        elif isinstance(zv, list) and zv:
            for v in zv:
                if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                    self.fail("z_values", f"z values must be finite numbers >= 0, got {v!r}")
            z = tuple(float(v) for v in zv)
        else:
            self.fail("z_values", "'z_values' must be a non-empty list or a {start, stop, step} object")
        if any(b <= a for a, b in zip(z, z[1:])):
            self.fail("z_values", "z values must be strictly increasing")
        return z

    def parse(self, root: Any) -> ExperimentConfig:
        if not isinstance(root, dict):
            raise ConfigError("top level must be a JSON object", 1, self.source)
        known = {"lattice", "beta", "injection", "z_values", "backend", "krylov", "observables",
                 "classical", "polya", "window", "heatmap", "output"}
        for key in root:
            if key not in known:
                self.fail(key, f"unknown key {key!r}")

        try:
            spec = self.lattice(root)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            self.fail("lattice", str(exc))
        z = self.z_values(root)

        inj = root.get("injection", "center")
        if inj != "center":
            if (not isinstance(inj, list) or len(inj) != 2
                    or not all(isinstance(v, int) and not isinstance(v, bool) for v in inj)):
                self.fail("injection", "'injection' must be \"center\" or [row, col]")
            if not (0 <= inj[0] < spec.rows and 0 <= inj[1] < spec.cols):
                self.fail("injection", f"injection site {inj} lies outside the {spec.rows}x{spec.cols} lattice")
            inj = (inj[0], inj[1])

        backend = root.get("backend", "spectral")
        if backend not in BACKENDS:
            self.fail("backend", f"backend must be one of {BACKENDS}, got {backend!r}")
        kry = self.section(root, "krylov")

        obs = root.get("observables", list(DEFAULT_OBSERVABLES))
        if not isinstance(obs, list) or any(o not in OBSERVABLES for o in obs):
            self.fail("observables", f"observables must be a list drawn from {OBSERVABLES}, got {obs!r}")
        obs = tuple(o for o in OBSERVABLES if o in obs)

        classical = root.get("classical", False)
        if not isinstance(classical, bool):
            self.fail("classical", "'classical' must be true or false")

        pol = self.section(root, "polya")
        period = self.number(pol, "sample_period", 0.5, positive=True)
        terms = self.integer(pol, "max_terms", 100)
        if "polya" in obs:
            need = period * terms
            if z[-1] < need - 1e-9 * need or z[0] > period * (1 + 1e-9):
                self.fail("polya" if "polya" in root else "observables",
                          f"polya needs z samples covering [{period:g}, {need:g}] mm; "
                          f"z_values span [{z[0]:g}, {z[-1]:g}]")

        win = root.get("window")
        window = None
        if win is not None:
            w = self.section(root, "window")
            window = (self.number(w, "z_min", positive=True), self.number(w, "z_max", positive=True))
            if window[1] <= window[0]:
                self.fail("window", "window z_max must exceed z_min")

        hm = self.section(root, "heatmap")
        try:
            style = HeatmapStyle(
                spot_sigma_px=self.number(hm, "spot_sigma_px", 4.0, positive=True),
                canvas_px=self.integer(hm, "canvas_px", 480),
                colormap=hm.get("colormap", "inferno"),
            )
        except KeyError:
            self.fail("colormap", f"unknown colormap {hm.get('colormap')!r}")

        out = self.section(root, "output")
        out_dir = out.get("dir")
        if out_dir is not None and not isinstance(out_dir, str):
            self.fail("dir", "output 'dir' must be a string")
        for key in ("svg", "figures"):
            if key in out and not isinstance(out[key], bool):
                self.fail(key, f"output {key!r} must be true or false")

        return ExperimentConfig(
            lattice=spec,
            z_values=z,
            injection=inj,
            beta=self.number(root, "beta", 0.0),
            backend=backend,
            krylov_subspace=self.integer(kry, "max_subspace", 30, minimum=2),
            krylov_tol=self.number(kry, "tol", 1e-10, positive=True),
            observables=obs,
            classical=classical,
            polya_period=period,
            polya_terms=terms,
            window=window,
            heatmap=style,
            svg=out.get("svg", True),
            figures=out.get("figures", True),
            out_dir=out_dir,
        )


def parse_config(data: dict, text: str | None = None, source: str | None = None) -> ExperimentConfig:
    return _Parser(text, source).parse(data)


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a config file, or the ``config`` block of a run manifest."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", 1, str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno, str(path)) from exc
    if isinstance(data, dict) and "manifest_version" in data and "config" in data:
        data = data["config"]
    return parse_config(data, text, str(path))
