import csv
import json
import math
import os
import subprocess
import sys
import xml.dom.minidom

import numpy as np
import pytest

from dpl.cli import main, parse_grid, parse_number, parse_range
from dpl.svg import PlotSpec, curves, heatmap, overlay, psi_color

PARAMS = ["--a", "1", "--b", "1", "--rho", "0", "--eps", "0.1", "--tau", "0"]


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_number_parsing():
    assert parse_number("3pi") == pytest.approx(3 * math.pi)
    assert parse_number("-pi/2") == pytest.approx(-math.pi / 2)
    assert parse_number("1.5*pi") == pytest.approx(1.5 * math.pi)
    assert parse_number("0.25") == 0.25
    assert parse_range("0,3pi") == pytest.approx((0, 3 * math.pi))
    assert parse_grid("41x41") == (41, 41)


def test_simulate_dde_and_phase(tmp_path, capsys):
    assert main(["simulate", "--engine", "dde", *PARAMS, "--T", "1000", "--out-dir", str(tmp_path),
                 "--svg"]) == 0
    rows = read_csv(tmp_path / "simulate_dde.csv")
    assert list(rows[0]) == ["t", "re_z1", "im_z1", "re_z2", "im_z2", "psi"]
    assert float(rows[-1]["t"]) == 1000.0
    assert abs(float(rows[-1]["psi"])) < 1e-3
    xml.dom.minidom.parse(str(tmp_path / "simulate_dde.svg"))
    assert main(["simulate", "--engine", "phase2", *PARAMS, "--T", "1000",
                 "--out-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "simulate_phase2.csv")
    assert abs(float(rows[-1]["psi"])) < 1e-3
    assert "in_phase" in capsys.readouterr().out


def test_simulate_missing_flag(tmp_path, capsys):
    assert main(["simulate", "--a", "1", "--b", "1", "--out-dir", str(tmp_path)]) == 2
    assert "usage" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--engine", "rk45"])
    assert info.value.code == 2
    assert main(["simulate", *PARAMS[:-2], "--tau", "1", "--dt", "0.03", "--T", "1",
                 "--out-dir", str(tmp_path)]) == 2


def test_simulate_integration_failure(tmp_path, monkeypatch):
    from dpl import cli
    from dpl.errors import NonFiniteState

    def boom(*a, **k):
        raise NonFiniteState("non-finite state", time=0.5)

    monkeypatch.setattr(cli, "integrate_sl", boom)
    assert main(["simulate", *PARAMS, "--T", "1", "--out-dir", str(tmp_path)]) == 3


def _write(path, data):
    path.write_text(json.dumps(data))
    return path


def test_config_file_and_override(tmp_path):
    cfg = _write(tmp_path / "cfg.json", {"base": {"a": 1, "b": 1, "rho": 0, "eps": 0.1, "tau": 0},
                                         "T": 50, "engine": "phase1"})
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "simulate_phase1.csv").exists()
    assert main(["simulate", "--config", str(cfg), "--engine", "phase2",
                 "--out-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "simulate_phase2.csv")
    assert float(rows[-1]["t"]) == 50.0
    bad = _write(tmp_path / "bad.json", {"grid": [3, 3], "colour": 1})
    assert main(["sweep", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2


def test_sweep_outputs_and_determinism(tmp_path, monkeypatch):
    args = ["sweep", "--grid", "4x3", "--T", "30", "--mode", "random_ic", "--n-samples", "2",
            "--seed", "3", "--overlay"]
    monkeypatch.setenv("DPL_THREADS", "1")
    assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
    monkeypatch.setenv("DPL_THREADS", "2")
    assert main(args + ["--out-dir", str(tmp_path / "b")]) == 0
    for name in ("sweep.csv", "sweep.svg", "sweep_overlay.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = read_csv(tmp_path / "a" / "sweep.csv")
    assert len(rows) == 12
    assert list(rows[0]) == ["tau", "rho", "f_in", "f_anti", "f_other", "bistable",
                             "psi_final_first_sample"]
    man = json.loads((tmp_path / "a" / "sweep_manifest.json").read_text())
    assert man["config"]["seed"] == 3 and man["config"]["mode"] == "random_ic"
    for name in ("sweep.svg", "sweep_overlay.svg"):
        text = (tmp_path / "a" / name).read_text()
        xml.dom.minidom.parseString(text)
        assert "href" not in text


def test_sweep_default_grid_row_count(tmp_path):
    assert main(["sweep", "--engine", "phase1", "--T", "1", "--phase-dt", "0.5",
                 "--out-dir", str(tmp_path)]) == 0
    assert len(read_csv(tmp_path / "sweep.csv")) == 6561


def test_boundary_first_order(tmp_path):
    assert main(["boundary", "--which", "in", "--order", "1", "--out-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "boundary.csv")
    assert rows
    for r in rows:
        assert abs(math.cos(float(r["rho"]) - float(r["tau"]))) < 1e-12
    xml.dom.minidom.parse(str(tmp_path / "boundary.svg"))


def test_boundary_second_order(tmp_path):
    assert main(["boundary", "--which", "both", "--order", "2", "--grid", "101x101",
                 "--out-dir", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "boundary.csv")
    assert len({r["curve_id"] for r in rows}) >= 2
    assert main(["boundary", "--tau-range", "1,1", "--out-dir", str(tmp_path)]) == 2


def test_verify_command(tmp_path, capsys):
    assert main(["verify", "--n-params", "2", "--n-samples", "10", "--out-dir", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "verify_report.json").read_text())
    assert rep["passed"] is True
    assert "FAIL" not in capsys.readouterr().out


def test_verify_failure_exit(tmp_path, monkeypatch):
    from dpl import cli
    monkeypatch.setattr(cli, "run_verification", lambda **k: {
        "residuals": [], "frequency_expansion": [],
        "linearization": {"max_abs_mismatch": 1.0, "passed": False}, "passed": False})
    assert main(["verify", "--out-dir", str(tmp_path)]) == 1


def test_compare_command(tmp_path):
    assert main(["compare", "--grid", "3x3", "--tau-range", "0,0.3", "--rho-range", "-1,1",
                 "--T", "200", "--out-dir", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "compare_summary.json").read_text())
    assert summary["cells"] == 9
    assert len(read_csv(tmp_path / "compare.csv")) == 9
    xml.dom.minidom.parse(str(tmp_path / "compare.svg"))


def test_console_script(tmp_path):
    out = subprocess.run([sys.executable, "-m", "dpl.cli", "boundary", "--order", "1",
                          "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    out = subprocess.run([sys.executable, "-m", "dpl.cli", "simulate"], capture_output=True, text=True)
    assert out.returncode == 2


def test_svg_colours_and_spec():
    assert psi_color(0.0) == (33, 102, 172)
    assert psi_color(math.pi) == psi_color(-math.pi) == (178, 24, 43)
    assert psi_color(float("nan")) == (160, 160, 160)
    with pytest.raises(ValueError):
        PlotSpec(kind="pie")
    with pytest.raises(ValueError):
        PlotSpec(width=10)
    with pytest.raises(ValueError):
        heatmap(PlotSpec(), [0, 1], [0, 1, 2], np.zeros((2, 2)))
    with pytest.raises(ValueError):
        heatmap(PlotSpec(x_range=(0.5, 1)), [0, 1], [0, 1], np.zeros((2, 2)))


def test_svg_documents_are_valid_and_stable():
    xs, ys = np.linspace(0, 3, 4), np.linspace(-1, 1, 3)
    psi = np.array([[0, 1, 2], [3, -1, -2], [np.nan, 0.5, 3.1], [0, 0, 0]], dtype=float)
    lines = [np.array([[0, -1], [3, 1]]), np.array([[1, 5], [2, -5]])]
    docs = [heatmap(PlotSpec(), xs, ys, psi), curves(PlotSpec(kind="curves"), lines),
            overlay(PlotSpec(kind="overlay"), xs, ys, psi, lines), curves(PlotSpec(kind="curves"), [])]
    for doc in docs:
        xml.dom.minidom.parseString(doc)
    assert docs[0] == heatmap(PlotSpec(), xs, ys, psi)
    assert docs[0].count("<rect") == 12 + 2
