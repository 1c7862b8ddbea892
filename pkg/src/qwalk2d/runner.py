"""End-to-end experiment pipeline: lattice, Hamiltonian, evolution,
observables, and the files written for each run."""

from __future__ import annotations

import json
import logging
import platform
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import matplotlib
import numpy as np
import scipy

from . import __version__, figures
from .classical import build_rate_matrix, classical_trace
from .config import ExperimentConfig
from .evolution import EvolutionTrace, evolve_trace, initial_state
from .hamiltonian import build_hamiltonian
from .heatmap import render_heatmap
from .io import write_grid_csv, write_projections_csv, write_series_csv, z_tag
from .lattice import Lattice, build_lattice
from .observables import (
    ObservableSeries,
    boundary_free_limit,
    decay_exponent,
    loglog_slope,
    polya_number,
    polya_series,
    projections,
    return_probability,
    similarity,
    variance_series,
)

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")


@dataclass
class RunResult:
    status: int
    out_dir: Path
    files: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    error: str | None = None


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _versions() -> dict:
    return {
        "qwalk2d": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
    }


class _Run:
    def __init__(self, config: ExperimentConfig, out_dir: Path, threads: int):
        self.config = config
        self.out = out_dir
        self.threads = threads
        self.files: list[str] = []
        self.timings: dict[str, float] = {}
        self.summary: dict = {}

    def path(self, *parts: str) -> Path:
        p = self.out.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        self.files.append(str(p.relative_to(self.out)))
        return p

    def stage(self, name: str, fn, *args):
        t0 = time.perf_counter()
        try:
            result = fn(*args)
        except Exception as exc:
            raise StageError(name, exc) from exc
        dt = time.perf_counter() - t0
        self.timings[name] = round(self.timings.get(name, 0.0) + dt, 6)
        log.info("stage %s done in %.3fs", name, dt)
        return result

    def manifest(self, status: str, error: str | None = None, stage: str | None = None) -> None:
        _dump_json(
            self.out / MANIFEST,
            {
                "manifest_version": 1,
                "status": status,
                "failed_stage": stage,
                "error": error,
                "config": self.config.to_dict(),
                "versions": _versions(),
                "timings_s": self.timings,
                "files": sorted(self.files),
            },
        )

    # -- stages -----------------------------------------------------------

    def evolve(self, lattice: Lattice) -> EvolutionTrace:
        cfg = self.config
        h = build_hamiltonian(lattice, cfg.beta)
        psi0 = initial_state(lattice, cfg.injection)
        opts = {}
        if cfg.backend == "krylov":
            opts = {"max_subspace": cfg.krylov_subspace, "tol": cfg.krylov_tol}
        self.hamiltonian, self.psi0 = h, psi0
        return evolve_trace(h, psi0, cfg.z_values, cfg.backend, threads=self.threads, **opts)

    def cross_check(self, trace: EvolutionTrace) -> ObservableSeries:
        cfg = self.config
        other = "krylov" if cfg.backend == "spectral" else "spectral"
        opts = {"max_subspace": cfg.krylov_subspace, "tol": cfg.krylov_tol} if other == "krylov" else {}
        ref = evolve_trace(self.hamiltonian, self.psi0, cfg.z_values, other, threads=self.threads, **opts)
        vals = [similarity(a, b) for a, b in zip(trace.grids, ref.grids)]
        return ObservableSeries(trace.z_values, vals, "similarity")

    def fit_window(self, trace: EvolutionTrace) -> tuple[float, float]:
        if self.config.window is not None:
            return self.config.window
        positive = trace.z_values[trace.z_values > 0]
        if len(positive) == 0:
            raise ValueError("no z > 0 samples for a log-log fit")
        return float(positive[0]), boundary_free_limit(trace)

    def execute(self) -> None:
        cfg = self.config
        obs = set(cfg.observables)
        lattice = self.stage("lattice", build_lattice, cfg.lattice)
        origin = lattice.center if cfg.injection == "center" else cfg.injection
        trace = self.stage("evolution", self.evolve, lattice)
        self.summary["backend"] = cfg.backend
        self.summary["origin"] = list(origin)

        if "grids" in obs:
            for z, g in zip(trace.z_values, trace.grids):
                write_grid_csv(self.path("grids", f"grid_{z_tag(z)}.csv"), z, g)

        ctrace = None
        if cfg.classical:
            rates = self.stage("classical", build_rate_matrix, lattice)
            p0 = np.zeros(lattice.n_sites)
            p0[lattice.index(*origin)] = 1.0
            ctrace = self.stage("classical", classical_trace, rates, p0, cfg.z_values)
            if "grids" in obs:
                for z, g in zip(ctrace.z_values, ctrace.grids):
                    write_grid_csv(self.path("classical", f"grid_{z_tag(z)}.csv"), z, g)

        var = cvar = None
        if obs & {"variance", "slope"}:
            var = self.stage("observables", variance_series, trace, lattice, origin)
            write_series_csv(self.path("series", "variance.csv"), var, "variance")
            if ctrace is not None:
                cvar = variance_series(ctrace, lattice, origin)
                write_series_csv(self.path("series", "classical_variance.csv"), cvar, "variance")

        p0s = cp0s = None
        if obs & {"p0", "decay", "polya"}:
            p0s = self.stage("observables", return_probability, trace, origin)
            write_series_csv(self.path("series", "p0.csv"), p0s, "p0")
            if ctrace is not None:
                cp0s = return_probability(ctrace, origin)
                write_series_csv(self.path("series", "classical_p0.csv"), cp0s, "p0")

        if obs & {"slope", "decay"}:
            z_lo, z_hi = self.stage("observables", self.fit_window, trace)
            self.summary["fit_window_mm"] = [z_lo, z_hi]
            if "slope" in obs:
                self.summary["variance_slope"] = self.stage("slope", loglog_slope, var, z_lo, z_hi)
                if cvar is not None:
                    self.summary["classical_variance_slope"] = self.stage("slope", loglog_slope, cvar, z_lo, z_hi)
            if "decay" in obs:
                self.summary["decay_exponent"] = self.stage("decay", decay_exponent, p0s, z_lo, z_hi)

        pol = None
        if "polya" in obs:
            est = self.stage("polya", polya_number, p0s, cfg.polya_period, cfg.polya_terms)
            pol = polya_series(p0s, cfg.polya_period, cfg.polya_terms)
            write_series_csv(self.path("series", "polya.csv"), pol, "polya")
            self.summary["polya"] = {
                "value": est.value,
                "terms_used": est.terms_used,
                "sample_period_mm": est.sample_period,
            }

        if "projections" in obs:
            for z, g in zip(trace.z_values, trace.grids):
                xp, yp = projections(g, lattice)
                write_projections_csv(self.path("projections", f"projection_{z_tag(z)}.csv"), z, xp, yp)

        if "similarity" in obs:
            sim = self.stage("similarity", self.cross_check, trace)
            write_series_csv(self.path("series", "similarity.csv"), sim, "similarity")
            self.summary["min_backend_similarity"] = float(sim.values.min())

        _dump_json(self.path("summary.json"), self.summary)

        if cfg.svg:
            self.stage("render", self.render_svgs, trace, lattice)
        if cfg.figures:
            self.stage("figures", self.render_figures, trace, lattice, var, cvar, p0s, cp0s, pol)

    def render_svgs(self, trace: EvolutionTrace, lattice: Lattice) -> None:
        for z, g in zip(trace.z_values, trace.grids):
            svg = render_heatmap(g, lattice, self.config.heatmap)
            self.path("heatmaps", f"heatmap_{z_tag(z)}.svg").write_text(svg, encoding="utf-8")

    def render_figures(self, trace, lattice, var, cvar, p0s, cp0s, pol) -> None:
        if var is not None:
            curves = {"quantum": var}
            if cvar is not None:
                curves["classical"] = cvar
            figures.plot_variance(curves, self.path("figures", "variance.png"))
        if p0s is not None:
            curves = {"quantum": p0s}
            if cp0s is not None:
                curves["classical"] = cp0s
            figures.plot_return_probability(curves, self.path("figures", "return_probability.png"))
        if pol is not None:
            figures.plot_polya({"quantum": pol}, self.path("figures", "polya.png"))
        if "projections" in self.config.observables:
            z, g = trace.z_values[-1], trace.grids[-1]
            xp, yp = projections(g, lattice)
            figures.plot_projections(xp, yp, self.path("figures", f"projections_{z_tag(z)}.png"), f"z = {z:g} mm")


def run_experiment(
    config: ExperimentConfig,
    out_dir: str | Path | None = None,
    threads: int = 1,
    svg: bool | None = None,
) -> RunResult:
    """Run the pipeline and write every output under ``out_dir``.

    The manifest is written first with status ``running`` and rewritten as
    ``complete`` or ``failed``, so partial output is always marked.
    """
    if svg is not None:
        config = replace(config, svg=svg)
    out = Path(out_dir or config.out_dir or "run")
    out.mkdir(parents=True, exist_ok=True)
    run = _Run(config, out, max(1, int(threads)))
    run.manifest("running")
    try:
        run.execute()
    except StageError as exc:
        run.manifest("failed", str(exc), exc.stage)
        return RunResult(1, out, run.files, run.summary, str(exc))
    except Exception as exc:  # I/O and anything outside a named stage
        run.manifest("failed", f"{type(exc).__name__}: {exc}", "output")
        return RunResult(1, out, run.files, run.summary, f"stage 'output' failed: {exc}")
    run.manifest("complete")
    return RunResult(0, out, run.files, run.summary)
