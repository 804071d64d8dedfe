import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from starwave import cli
from starwave import verify as verify_mod
from starwave.config import ConfigError, parse_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
MODEL = {"n_rays": 3, "ray_len": 100, "delta": 1.0, "mass": 0.0, "center_mass": 1.0}


def doc(**extra):
    return json.dumps({"model": dict(MODEL), **extra})


def write(tmp_path, text, name="cfg.json"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_valid_example():
    cfg = parse_config(doc(command="dispersion", k_grid={"min": 0.1, "max": 3.0, "count": 64}))
    assert cfg.command == "dispersion"
    assert cfg.model.n_rays == 3
    assert len(cfg.k_grid.values()) == 64
    assert cfg.k_grid.values()[-1] == 3.0


@pytest.mark.parametrize(
    "text, path",
    [
        (json.dumps({"command": "dispersion"}), "model"),
        (json.dumps({"model": {**MODEL, "n_rays": 1}, "command": "dispersion"}), "model.n_rays"),
        (json.dumps({"model": {**MODEL, "n_rays": 3.5}, "command": "dispersion"}), "model.n_rays"),
        (json.dumps({"model": {**MODEL, "delta": -1}, "command": "dispersion"}), "model.delta"),
        (json.dumps({"model": {**MODEL, "spin": 1}, "command": "dispersion"}), "model.spin"),
        (json.dumps({"model": {k: v for k, v in MODEL.items() if k != "mass"}, "command": "verify"}), "model.mass"),
        (doc(command="fly"), "command"),
        (doc(command="verify", extra=1), "extra"),
        (doc(command="verify", seed=-1), "seed"),
        (doc(command="verify", seed=2**64), "seed"),
        (doc(command="verify", dt=0), "dt"),
        (doc(command="reflection", k_grid={"min": 0.0, "max": 1.0, "count": 4}), "k_grid.min"),
        (doc(command="dispersion", k_grid={"min": 0.0, "max": 4.0, "count": 4}), "k_grid.max"),
        (doc(command="dispersion", k_grid={"min": 0.5, "max": 1.0, "count": 0}), "k_grid.count"),
        (doc(command="scatter", packet={"direction": "up"}), "packet.direction"),
        (doc(command="scatter", packet={"k0": []}), "packet.k0"),
        (doc(command="modes-roundtrip", roundtrip={"n_rays": [2, 3]}), "roundtrip.n_rays"),
        (doc(command="modes-roundtrip", roundtrip={"precision": 16}), "roundtrip.precision"),
        (doc(command="continuum", continuum={"k1": [0, 0]}), "continuum.k1"),
        (doc(command="continuum", continuum={"deltas": [0.01, 0.1]}), "continuum.deltas"),
    ],
)
def test_parse_errors_name_the_field(text, path):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.path == path
    assert path in str(info.value)


def test_malformed_json():
    with pytest.raises(ConfigError, match="malformed"):
        parse_config("{not json")


def test_dispersion_grid_includes_band_edge(tmp_path):
    rc = cli.main([str(CONFIGS / "dispersion.json"), "--out", str(tmp_path)])
    assert rc == 0
    rows = read_csv(tmp_path / "dispersion.csv")
    assert list(rows[0]) == ["k", "omega"]
    assert len(rows) == 65
    assert float(rows[0]["omega"]) == 0.0
    assert float(rows[-1]["k"]) == math.pi
    assert float(rows[-1]["omega"]) == pytest.approx(2.0, abs=1e-15)


def test_reflection_constant_case(tmp_path):
    assert cli.main([str(CONFIGS / "reflection.json"), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "reflection.csv")
    assert len(rows) == 64
    for r in rows:
        assert float(r["exact_abs2"]) == pytest.approx(1 / 9, abs=1e-12)
        assert float(r["paper_abs2"]) == pytest.approx(1 / 9, abs=1e-12)
        assert abs(float(r["exact_unitarity_residual"])) < 1e-12


def test_reflection_paper_columns_blank_off_three_rays(tmp_path):
    path = write(tmp_path, json.dumps({"model": {**MODEL, "n_rays": 5}, "command": "reflection"}))
    assert cli.main([path, "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "reflection.csv")
    assert len(rows) == 64
    assert math.isnan(float(rows[0]["paper_re"]))
    assert math.isfinite(float(rows[0]["exact_re"]))


def test_csv_uses_full_precision(tmp_path):
    path = write(tmp_path, doc(command="dispersion", k_grid={"min": 0.1, "max": 0.1, "count": 1}))
    cli.main([path, "--out", str(tmp_path)])
    line = (tmp_path / "dispersion.csv").read_text().splitlines()[1]
    omega = line.split(",")[1]
    assert float(omega) == 2 * math.sin(0.05)
    assert len(omega.replace(".", "").lstrip("0")) == 17


def test_continuum_command(tmp_path):
    assert cli.main([str(CONFIGS / "continuum.json"), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "continuum.csv")
    errs = [float(r["phase_error"]) for r in rows]
    assert errs == sorted(errs, reverse=True)
    assert float(rows[0]["fitted_order"]) >= 0.9


def test_scatter_command(tmp_path):
    path = write(tmp_path, json.dumps({
        "model": {**MODEL, "ray_len": 1500},
        "command": "scatter",
        "packet": {"k0": [1.2, 2.0], "center": 400, "width": 40},
    }))
    assert cli.main([path, "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "scatter.csv")
    assert [float(r["k0"]) for r in rows] == [1.2, 2.0]
    assert all(float(r["rel_err"]) < 0.02 for r in rows)
    series = read_csv(tmp_path / "scatter_series.csv")
    assert list(series[0]) == ["k0", "t", "energy", "centroid_ray1", "centroid_ray2", "centroid_ray3"]
    assert len(series) == 2 * 51


def test_scatter_horizon_is_a_usage_error(tmp_path, capsys):
    path = write(tmp_path, json.dumps({"model": {**MODEL, "ray_len": 600}, "command": "scatter",
                                       "packet": {"center": 400}}))
    assert cli.main([path, "--out", str(tmp_path)]) == 1
    assert "horizon" in capsys.readouterr().err


def test_modes_roundtrip_command(tmp_path):
    path = write(tmp_path, doc(command="modes-roundtrip",
                               roundtrip={"n_rays": [3, 5], "ray_len": [8], "states": 3}))
    assert cli.main([path, "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "roundtrip.csv")
    assert [(r["n_rays"], r["grid_size"]) for r in rows] == [("3", "10"), ("3", "32"), ("5", "10"), ("5", "32")]
    assert all(float(r["max_error"]) < 1e-10 for r in rows)
    report = (tmp_path / "modes_roundtrip_report.txt").read_text()
    assert report.count("kernel vs triangular") == 4


def test_modes_roundtrip_refuses_heavy_center(tmp_path):
    path = write(tmp_path, json.dumps({"model": {**MODEL, "center_mass": 2.0}, "command": "modes-roundtrip"}))
    assert cli.main([path, "--out", str(tmp_path)]) == 1


def test_deterministic_output(tmp_path):
    path = write(tmp_path, doc(command="modes-roundtrip",
                               roundtrip={"n_rays": [4], "ray_len": [6], "states": 2, "precision": "double"}))
    for sub in ("a", "b"):
        assert cli.main([path, "--out", str(tmp_path / sub), "--seed", "99"]) == 0
    for name in ("roundtrip.csv", "modes_roundtrip_report.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    cli.main([path, "--out", str(tmp_path / "c"), "--seed", "100"])
    assert (tmp_path / "a" / "modes_roundtrip_report.txt").read_bytes() != \
        (tmp_path / "c" / "modes_roundtrip_report.txt").read_bytes()


def test_exit_codes(tmp_path, monkeypatch, capsys):
    assert cli.main([str(tmp_path / "missing.json")]) == 1
    assert cli.main([write(tmp_path, "[]")]) == 1
    assert "expected an object" in capsys.readouterr().err

    bad = [verify_mod.Check("always fails", False, 1.0, 0.5)]
    monkeypatch.setattr(verify_mod, "run_suite", lambda seed: bad)
    path = write(tmp_path, doc(command="verify"))
    assert cli.main([path, "--out", str(tmp_path)]) == 2
    assert "[FAIL] always fails" in (tmp_path / "verify_report.txt").read_text()


def test_seed_flag_range(tmp_path):
    path = write(tmp_path, doc(command="dispersion"))
    assert cli.main([path, "--out", str(tmp_path), "--seed", str(2**64)]) == 1


def test_output_key_used_without_flag(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    path = write(tmp_path, doc(command="dispersion", output="res"))
    assert cli.main([path]) == 0
    assert (tmp_path / "res" / "dispersion.csv").exists()


def test_verify_default_config_passes(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "starwave.cli", str(CONFIGS / "verify.json"), "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert out.returncode == 0, out.stdout + out.stderr
    report = (tmp_path / "verify_report.txt").read_text().splitlines()
    assert report and all(line.startswith("[PASS]") for line in report)
