import json
import subprocess
import sys

import numpy as np
import pytest

from shearwave import __version__
from shearwave.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_VERIFY, main, parse_gamma_range
from shearwave.cli import ConfigError
from shearwave.export import fmt, render


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def read_csv(path):
    lines = path.read_text().splitlines()
    head = [l for l in lines if l.startswith("#")]
    body = [l for l in lines if not l.startswith("#")]
    cols = body[0].split(",")
    rows = [l.split(",") for l in body[1:]]
    return head, cols, rows


def test_gamma_range_inclusive():
    assert parse_gamma_range("-4.5:3:0.5") == tuple(-4.5 + 0.5 * k for k in range(16))
    with pytest.raises(ConfigError):
        parse_gamma_range("1:0:0.5")
    with pytest.raises(ConfigError):
        parse_gamma_range("nonsense")


def test_number_format_round_trips():
    x = 0.1 + 0.2
    assert float(fmt(x)) == x
    assert fmt(float("nan")) == "nan"
    with pytest.raises(ValueError):
        render(("a",), [(1,)], {}, "xml")


def test_dispersion_table(tmp_path):
    assert run(tmp_path, "dispersion", "--gamma=-1.5,0,1.5") == EXIT_OK
    head, cols, rows = read_csv(tmp_path / "dispersion.csv")
    assert cols == ["gamma", "lambda_star", "q_star", "depth"]
    assert head[0] == f"# shearwave {__version__}"
    assert any(h.startswith("# epsilon=") for h in head)
    vals = {float(r[0]): [float(x) for x in r[1:]] for r in rows}
    assert vals[-1.5][2] == pytest.approx(0.80072, abs=5e-4)
    assert vals[1.5][2] == pytest.approx(0.758042, abs=5e-5)
    assert vals[0.0][0] == pytest.approx(6.441421165939238, rel=1e-12)


def test_default_gamma_list(tmp_path):
    assert run(tmp_path, "dispersion") == EXIT_OK
    _, _, rows = read_csv(tmp_path / "dispersion.csv")
    assert len(rows) == 16


def test_failure_rows_and_exit_code(tmp_path):
    assert run(tmp_path, "dispersion", "--gamma=-1.5,1000") == EXIT_NUMERIC
    head, _, rows = read_csv(tmp_path / "dispersion.csv")
    assert len(rows) == 1
    assert any("note: gamma=1000 failed: NoDispersionRootError" in h for h in head)


def test_config_errors(tmp_path):
    assert run(tmp_path, "dispersion", "--p0", "1") == EXIT_CONFIG
    assert run(tmp_path, "dispersion", "--gamma-range", "3:1:1") == EXIT_CONFIG
    assert run(tmp_path, "calibrate", "--epsilon", "-1") == EXIT_CONFIG
    assert run(tmp_path, "fields", "--grid", "4x4") == EXIT_CONFIG
    assert run(tmp_path, "dispersion", "--gamma", "0", "--gamma-range", "0:1:1") == EXIT_CONFIG
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert run(tmp_path, "dispersion", "--config", str(cfg)) == EXIT_CONFIG


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# example\ngamma = -1.5\nformat = json\ng = 9.8\n")
    assert run(tmp_path, "dispersion", "--config", str(cfg), "--gamma", "1.5") == EXIT_OK
    doc = json.loads((tmp_path / "dispersion.json").read_text())
    assert doc["columns"] == ["gamma", "lambda_star", "q_star", "depth"]
    assert [r[0] for r in doc["rows"]] == [1.5]
    assert doc["header"]["version"] == __version__


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("SHEARWAVE_OUT", str(tmp_path / "envout"))
    assert main(["dispersion", "--gamma", "0"]) == EXIT_OK
    assert (tmp_path / "envout" / "dispersion.csv").exists()


def test_calibrate_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["calibrate", "--gamma=-1.5,1.5", "--order", "3", "--grid", "64x32"]
    assert main(args + ["--out", str(a)]) == EXIT_OK
    assert main(args + ["--out", str(b)]) == EXIT_OK
    ta = (a / "calibration_order3.csv").read_bytes()
    assert ta == (b / "calibration_order3.csv").read_bytes()
    _, cols, rows = read_csv(a / "calibration_order3.csv")
    assert cols == ["gamma", "b", "btilde", "achieved_eps", "binding_norm"]
    assert len(rows) == 2 and rows[0][4] in ("interior", "surface")


def test_fields_files(tmp_path):
    assert run(tmp_path, "fields", "--gamma", "-1.5", "--order", "2", "--grid", "64x33", "--format", "dat") == EXIT_OK
    names = sorted(p.name for p in tmp_path.iterdir())
    for family in ("field", "surface", "streamlines", "surface_v", "crest_cu", "bottom_pressure", "curvature"):
        assert f"{family}_gamma-1.500.dat" in names
    data = np.loadtxt(tmp_path / "streamlines_gamma-1.500.dat")
    assert np.all(data[data[:, 0] == -2.0][:, 2] == 0)
    sv = np.loadtxt(tmp_path / "surface_v_gamma-1.500.dat")
    q, v = sv[:, 0], sv[:, 1]
    nq = q.size
    assert np.allclose(v, -v[(-np.arange(nq)) % nq], atol=1e-12)
    bp = np.loadtxt(tmp_path / "bottom_pressure_gamma-1.500.dat")
    assert bp[np.argmax(bp[:, 1]), 0] == pytest.approx(0.0, abs=1e-12)
    field = np.loadtxt(tmp_path / "field_gamma-1.500.dat")
    assert field.shape == (64 * 33, 6)


def test_fields_fixed_amplitude_stagnation(tmp_path):
    assert run(tmp_path, "fields", "--gamma", "1.5", "--order", "1", "--b", "2", "--grid", "16x16") == EXIT_NUMERIC


def test_compare_identical_orders(tmp_path):
    assert run(tmp_path, "compare", "--gamma", "0", "--orders", "2,2", "--grid", "64x32") == EXIT_OK
    _, cols, rows = read_csv(tmp_path / "compare.csv")
    assert cols[-1] == "curvature_gap"
    assert all(float(x) == 0 for x in rows[0][5:])


def test_residuals_table(tmp_path):
    assert run(tmp_path, "residuals", "--gamma", "0", "--order", "2", "--grid", "64x32") == EXIT_OK
    _, cols, rows = read_csv(tmp_path / "residuals_order2.csv")
    row = dict(zip(cols, rows[0]))
    assert float(row["slope_interior"]) == pytest.approx(3.0, abs=0.1)
    assert float(row["max_bed"]) <= 1e-12


def test_sweep_index(tmp_path):
    assert run(tmp_path, "sweep", "--gamma=-1.5,1.5", "--orders", "1,2", "--grid", "64x32", "--jobs", "2") == EXIT_OK
    _, cols, rows = read_csv(tmp_path / "sweep_index.csv")
    assert cols[0] == "order" and len(rows) == 4
    assert (tmp_path / "sweep" / "gamma+1.500.csv").exists()


def test_verify_negative_control(tmp_path):
    assert run(tmp_path, "verify", "--gamma", "0", "--inject-corruption") == EXIT_VERIFY


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "shearwave.cli", "dispersion", "--gamma", "0",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0 and "dispersion.csv" in out.stdout
