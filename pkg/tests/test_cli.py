import json
import subprocess
import sys

import numpy as np
import pytest

from paresolve.cli import main
from paresolve.experiment import read_plot_csv
from paresolve.signal import read_signal_csv

from conftest import DEFAULT_CONFIG


def run(*args):
    return main([str(a) for a in args])


def test_cutoff_text(capsys):
    assert run("cutoff", "--config", DEFAULT_CONFIG) == 0
    out = capsys.readouterr().out
    assert out.count("f_cut=") == 2
    assert "delta_space=" in out and "c_at_cut=" in out


def test_cutoff_json_from_flags(capsys):
    assert run("cutoff", "--alpha-db", 0.4942081816217317, "--y", 1.543241168958696, "--c0", 1530, "--r", 0.006, "--snr", 100, "--json") == 0
    rep = json.loads(capsys.readouterr().out)
    assert abs(rep["f_cut"] - 24e6) < 1e-3
    assert set(rep) == {"omega_cut", "f_cut", "snr_used", "r", "delta_space", "delta_time", "c_at_cut"}


def test_cutoff_verbose_and_file(tmp_path, capsys):
    assert run("cutoff", "-v", "--config", DEFAULT_CONFIG, "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "ln(10)/20" in out and "30-71 MHz" in out
    reports = json.loads((tmp_path / "cutoff.json").read_text())
    assert [round(r["f_cut"] / 1e6) for r in reports] == [24, 11]


def test_error_line(capsys):
    assert run("cutoff", "--alpha-db", 0.5, "--y", 1.5, "--r", 0.02, "--snr", 0.5) == 1
    err = json.loads(capsys.readouterr().err.strip())
    assert err["type"] == "ResolutionError" and "signal never below noise" in err["error"]


def test_missing_input_error(capsys, tmp_path):
    assert run("reconstruct", "--config", DEFAULT_CONFIG, "--input", tmp_path / "none.csv", "--out", tmp_path) == 1
    assert json.loads(capsys.readouterr().err)["type"] == "FileNotFoundError"


@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert run("simulate", "--config", DEFAULT_CONFIG, "--out", out) == 0
    return out


def test_simulate_files(simulated):
    names = sorted(p.name for p in simulated.iterdir())
    assert names == ["measurement_20mm.csv", "measurement_6mm.csv", "operator_20mm.csv", "operator_6mm.csv", "phantom.csv"]
    assert read_signal_csv(simulated / "measurement_20mm.csv").n == 2048


def test_simulate_byte_identical(simulated, tmp_path):
    assert run("simulate", "--config", DEFAULT_CONFIG, "--out", tmp_path) == 0
    for p in simulated.iterdir():
        assert (tmp_path / p.name).read_bytes() == p.read_bytes()


@pytest.mark.parametrize("method", ["tsvd", "dr"])
def test_reconstruct(simulated, tmp_path, method, capsys):
    args = ["reconstruct", "--config", DEFAULT_CONFIG, "--input", simulated / "measurement_20mm.csv", "--method", method, "--out", tmp_path]
    if method == "dr":
        args += ["--iters", 50, "--lambda", 1e4]
    assert run(*args) == 0
    rec = read_signal_csv(tmp_path / "reconstruction.csv")
    assert int(np.argmax(rec.samples)) == 1024
    diag = (tmp_path / "diagnostics.csv").read_text().splitlines()
    assert diag[0] == "iter,residual,objective,fp_residual"
    assert len(diag) == (2 if method == "tsvd" else 51)
    out = capsys.readouterr().out
    assert ("effective_cutoff=" in out) if method == "tsvd" else ("lambda=10000.0" in out)


def test_plotdata_from_inputs(simulated, tmp_path):
    assert run("plotdata", "--input", simulated / "phantom.csv", "--input", simulated / "measurement_6mm.csv", "--label", "ideal", "--label", "6mm", "--out", tmp_path) == 0
    header, data = read_plot_csv(tmp_path / "plot.csv")
    assert header == ["t", "ideal", "6mm"] and data.shape == (2048, 3)
    assert (tmp_path / "plot.svg").exists()


def test_plotdata_figures(tmp_path):
    assert run("plotdata", "--config", DEFAULT_CONFIG, "--window", 2e-6, "--out", tmp_path) == 0
    header, data = read_plot_csv(tmp_path / "fig2.csv")
    assert header == ["t", "ideal", "tsvd_6mm", "tsvd_20mm"]
    assert data.shape[0] == 220 and np.all(np.max(data[:, 1:], axis=0) == 1.0)
    header, _ = read_plot_csv(tmp_path / "fig3.csv")
    assert header == ["t", "tsvd", "dr_20", "dr_200"]


def test_plotdata_needs_input(capsys, tmp_path):
    assert run("plotdata", "--out", tmp_path) == 1
    assert "needs" in json.loads(capsys.readouterr().err)["error"]


def test_benchmark_cli(tmp_path, capsys):
    assert run("benchmark", "--config", DEFAULT_CONFIG, "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "tsvd:" in out and "dr200:" in out
    assert (tmp_path / "benchmark.csv").exists() and (tmp_path / "benchmark.json").exists()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "paresolve", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("simulate", "cutoff", "reconstruct", "benchmark", "plotdata"):
        assert cmd in proc.stdout
