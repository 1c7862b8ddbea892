import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from qwalk2d.cli import main
from qwalk2d.config import ConfigError, load_config, parse_config
from qwalk2d.evolution import ProbabilityGrid
from qwalk2d.io import read_grid_csv, read_series_csv, write_grid_csv, write_series_csv
from qwalk2d.observables import ObservableSeries

SMALL = {
    "lattice": {"rows": 15, "cols": 15, "coupling": {"nearest": 0.5, "kappa": 0.2}},
    "z_values": {"start": 0.0, "stop": 2.0, "step": 0.25},
    "observables": ["grids", "variance", "p0", "slope", "projections", "similarity"],
    "classical": True,
    "window": {"z_min": 0.25, "z_max": 2.0},
}


def write_cfg(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data, indent=2))
    return p


def test_grid_csv_round_trip(tmp_path, rng):
    g = rng.random((4, 5))
    g /= g.sum()
    path = tmp_path / "g.csv"
    write_grid_csv(path, 4.31, ProbabilityGrid(g))
    assert path.read_text().splitlines()[0] == "z,row,col,probability"
    ((z, back),) = read_grid_csv(path)
    assert z == 4.31
    np.testing.assert_array_equal(back.values, g)


def test_series_csv_round_trip(tmp_path):
    s = ObservableSeries([0.1, 0.2, 1 / 3], [1e-300, np.pi, 2.0 / 7])
    write_series_csv(tmp_path / "s.csv", s, "p0")
    back = read_series_csv(tmp_path / "s.csv")
    np.testing.assert_array_equal(back.values, s.values)
    np.testing.assert_array_equal(back.z_values, s.z_values)


def test_config_round_trip():
    cfg = parse_config(SMALL)
    again = parse_config(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    assert cfg.z_values == (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)


@pytest.mark.parametrize(
    "patch,key",
    [
        ({"backend": "pade"}, "backend"),
        ({"z_values": [1.0, 0.5]}, "z_values"),
        ({"observables": ["nope"]}, "observables"),
        ({"injection": [99, 0]}, "injection"),
        ({"bogus": 1}, "bogus"),
        ({"observables": ["p0", "polya"]}, "observables"),
    ],
)
def test_config_errors_are_line_anchored(tmp_path, patch, key):
    path = write_cfg(tmp_path, {**SMALL, **patch})
    with pytest.raises(ConfigError) as info:
        load_config(path)
    lines = path.read_text().splitlines()
    assert info.value.line is not None
    assert f'"{key}"' in lines[info.value.line - 1]
    assert str(info.value).startswith(f"{path}:{info.value.line}:")


def test_config_bad_lattice(tmp_path):
    bad = {**SMALL, "lattice": {"rows": 0, "cols": 3}}
    with pytest.raises(ConfigError, match="rows"):
        load_config(write_cfg(tmp_path, bad))


def test_invalid_json_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "lattice": {"rows": 3,,}\n}\n')
    with pytest.raises(ConfigError) as info:
        load_config(p)
    assert info.value.line == 2


def test_validate_command(tmp_path, capsys):
    assert main(["validate", str(write_cfg(tmp_path, SMALL))]) == 0
    assert "ok" in capsys.readouterr().out
    assert main(["validate", str(write_cfg(tmp_path, {**SMALL, "backend": "x"}, "b.json"))]) == 2
    assert "error:" in capsys.readouterr().err


def test_run_writes_everything(tmp_path):
    out = tmp_path / "run"
    assert main(["run", str(write_cfg(tmp_path, SMALL)), "--out-dir", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "complete"
    assert set(manifest["versions"]) >= {"python", "numpy", "scipy"}
    for f in manifest["files"]:
        assert (out / f).exists(), f
    assert len(list((out / "grids").glob("*.csv"))) == 9
    assert len(list((out / "heatmaps").glob("*.svg"))) == 9
    assert (out / "figures" / "variance.png").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["variance_slope"] == pytest.approx(2.0, abs=1e-3)
    assert summary["min_backend_similarity"] > 0.9999
    for text in (out / "series" / "p0.csv").read_text(encoding="utf-8").splitlines():
        assert "," in text
    assert (out / "series" / "p0.csv").read_bytes().endswith(b"\n")


def test_run_from_manifest_is_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", str(write_cfg(tmp_path, SMALL)), "--out-dir", str(a), "--no-svg"]) == 0
    assert main(["run", str(a / "manifest.json"), "--out-dir", str(b), "--no-svg", "--threads", "3"]) == 0
    assert not (a / "heatmaps").exists()
    files = sorted(p.relative_to(a) for p in a.rglob("*.csv"))
    assert files
    for rel in files:
        assert (a / rel).read_bytes() == (b / rel).read_bytes()
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()


def test_single_site_run(tmp_path):
    cfg = {"lattice": {"rows": 1, "cols": 1}, "z_values": [0, 1], "observables": ["grids"]}
    out = tmp_path / "one"
    assert main(["run", str(write_cfg(tmp_path, cfg)), "--out-dir", str(out)]) == 0
    for f in sorted((out / "grids").glob("*.csv")):
        ((_, g),) = read_grid_csv(f)
        assert g.values.tolist() == [[1.0]]


def test_numerical_failure_marks_manifest(tmp_path, capsys):
    cfg = {**SMALL, "observables": ["p0", "decay"], "window": {"z_min": 0.25, "z_max": 2.0}}
    out = tmp_path / "fail"
    assert main(["run", str(write_cfg(tmp_path, cfg)), "--out-dir", str(out)]) == 1
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "failed"
    assert manifest["failed_stage"] == "decay"
    assert "stage 'decay'" in capsys.readouterr().err


def test_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv("QWALK2D_OUTPUT_ROOT", str(tmp_path / "root"))
    cfg = write_cfg(tmp_path, {"lattice": {"rows": 3, "cols": 3}, "z_values": [0.5]}, "exp.json")
    assert main(["run", str(cfg), "--no-svg"]) == 0
    assert (tmp_path / "root" / "exp" / "manifest.json").exists()


def test_compare_render_observables(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", str(write_cfg(tmp_path, SMALL)), "--out-dir", str(out), "--no-svg"]) == 0
    capsys.readouterr()
    g = out / "grids" / "grid_z01.0000.csv"
    assert main(["compare", str(g), str(g)]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(1.0, abs=1e-12)
    assert main(["compare", str(g), str(out / "classical" / "grid_z01.0000.csv")]) == 0
    assert 0 < float(capsys.readouterr().out) < 1

    assert main(["render", str(g), "--out-dir", str(tmp_path / "svg")]) == 0
    assert (tmp_path / "svg" / "heatmap_z01.0000.svg").exists()

    assert main(["observables", str(out), "--out-dir", str(tmp_path / "re")]) == 0
    ours = read_series_csv(out / "series" / "variance.csv")
    theirs = read_series_csv(tmp_path / "re" / "variance.csv")
    np.testing.assert_array_equal(ours.values, theirs.values)


def test_module_entry_point(tmp_path):
    cfg = write_cfg(tmp_path, SMALL)
    proc = subprocess.run([sys.executable, "-m", "qwalk2d", "validate", str(cfg)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
