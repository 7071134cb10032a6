import math
from dataclasses import replace

import numpy as np
import pytest

from paresolve.attenuation import AttenuationLaw, wavenumber
from paresolve.experiment import (
    ConfigError,
    ExperimentConfig,
    PhantomSpec,
    centre_time,
    check_wraparound,
    emit_plot_data,
    generate_phantom,
    load_config,
    noise_reference,
    read_plot_csv,
    run_benchmark,
    run_forward,
    write_benchmark,
)
from paresolve.signal import Signal, SignalError

from conftest import DEFAULT_CONFIG

DT = 1 / 110e6
FAT = AttenuationLaw.from_db(0.4942081816217317, 1.543241168958696, 1530.0)


def small_cfg(**kw):
    base = dict(n=1024, dt=DT, law=FAT, r_list=(0.002, 0.006, 0.02), snr=100.0)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def bench(default_cfg):
    return run_benchmark(default_cfg)


def test_single_delta_unit_area():
    cfg = small_cfg()
    s = generate_phantom(PhantomSpec(), cfg)
    nz = np.flatnonzero(s.samples)
    assert list(nz) == [cfg.n // 2]
    assert s.samples[nz[0]] == 1 / DT
    assert math.isclose(np.sum(s.samples) * DT, 1.0, rel_tol=1e-15)


def test_two_delta_collision():
    cfg = small_cfg()
    c = centre_time(cfg)
    with pytest.raises(ConfigError, match="collide"):
        generate_phantom(PhantomSpec("two-delta", (c, c + 0.3 * DT), (1.0, 1.0)), cfg)


def test_two_delta_amplitudes():
    cfg = small_cfg()
    c = centre_time(cfg)
    s = generate_phantom(PhantomSpec("two-delta", (c, c + 10 * DT), (1.0, 0.5)), cfg)
    assert s.samples[cfg.n // 2] * DT == 1.0 and s.samples[cfg.n // 2 + 10] * DT == 0.5


def test_phantom_errors():
    cfg = small_cfg()
    with pytest.raises(ConfigError, match="outside"):
        generate_phantom(PhantomSpec("single-delta", (-1e-6,)), cfg)
    with pytest.raises(ConfigError, match="nonnegative"):
        PhantomSpec("single-delta", amplitudes=(-1.0,))
    with pytest.raises(ConfigError):
        PhantomSpec("three-delta")
    with pytest.raises(ConfigError):
        generate_phantom(PhantomSpec("two-delta", (centre_time(cfg),)), cfg)


@pytest.mark.parametrize("width", [3 * DT, 10.5 * DT, 40 * DT])
def test_gaussian_phantom_area(width):
    cfg = small_cfg()
    s = generate_phantom(PhantomSpec("single-delta", (centre_time(cfg) + 0.37 * DT,), (2.5,), width=width), cfg)
    x = s.samples
    trapezoid = DT * (np.sum(x) - 0.5 * (x[0] + x[-1]))
    assert abs(trapezoid - 2.5) < 1e-6
    assert np.all(x >= 0)


def test_from_file_phantom(tmp_path):
    from paresolve.signal import write_signal_csv

    cfg = small_cfg()
    x = np.zeros(cfg.n)
    x[300] = 2.0
    path = write_signal_csv(Signal(x, DT), tmp_path / "ph.csv")
    s = generate_phantom(PhantomSpec("from-file", path=str(path)), cfg)
    np.testing.assert_array_equal(s.samples, x)
    write_signal_csv(Signal(-x, DT), path)
    with pytest.raises(ConfigError, match="negative"):
        generate_phantom(PhantomSpec("from-file", path=str(path)), cfg)


def test_run_forward_lossless_short_path():
    law = AttenuationLaw(0.0, 1.5, 1530.0, dispersion=False)
    cfg = small_cfg(law=law, r_list=(1e-9,), snr=1e12)
    ph = generate_phantom(PhantomSpec(), cfg)
    meas = run_forward(cfg, ph)[1e-9]
    assert np.max(np.abs(meas.samples - ph.samples)) <= 1e-9 * np.max(ph.samples)


def test_short_path_limit_is_wavenumber_factor():
    # as r -> 0 the operator tends to diag(w / (c0 K)), not to the identity
    cfg = small_cfg(r_list=(1e-12,), snr=1e12)
    op = cfg.operator(1e-12)
    w = op.omega[1 : cfg.n // 2]
    want = np.conj(w / (FAT.c0 * wavenumber(FAT, w)))
    np.testing.assert_allclose(op.multipliers[1 : cfg.n // 2], want, rtol=1e-8)
    assert np.max(np.abs(op.multipliers - 1)) > 1e-3


def test_run_forward_peak_decreases_with_distance():
    cfg = small_cfg(snr=1e12)
    meas = run_forward(cfg, generate_phantom(PhantomSpec(), cfg))
    peaks = [np.max(meas[r].samples) for r in sorted(cfg.r_list)]
    assert all(a > b for a, b in zip(peaks, peaks[1:]))


def test_run_forward_noise_level():
    cfg = small_cfg(n=4096, snr=50.0)
    ph = generate_phantom(PhantomSpec(), cfg)
    meas = run_forward(cfg, ph)[0.02]
    clean = cfg.operator(0.02).forward_array(ph.samples)
    std = np.std(meas.samples - clean)
    assert math.isclose(std, noise_reference(ph) / 50.0, rel_tol=0.05)
    # a centred unit impulse has a flat spectrum of height 1 / dt
    assert math.isclose(noise_reference(ph), (1 / DT) / math.sqrt(cfg.n), rel_tol=1e-12)


def test_run_forward_deterministic():
    cfg = small_cfg()
    ph = generate_phantom(PhantomSpec(), cfg)
    a, b = run_forward(cfg, ph), run_forward(cfg, ph)
    for r in cfg.r_list:
        assert a[r].samples.tobytes() == b[r].samples.tobytes()
    c = run_forward(cfg, ph, seed=5)
    assert not np.array_equal(a[0.02].samples, c[0.02].samples)


def test_config_loads_default(default_cfg):
    cfg = default_cfg
    assert cfg.n == 2048 and cfg.dt == 1 / 110e6
    assert cfg.r_list == (0.006, 0.02) and cfg.snr == 100
    assert cfg.dr_iterations == (20, 200)
    assert cfg.dr.tau == 20000 and cfg.dr.relaxation == 1.9 and cfg.dr.lambda_factor == 0.002
    assert cfg.law.dispersion and math.isclose(cfg.law.omega_ref, 2 * math.pi * 1e6)
    assert round(cfg.cutoff(0.006).f_cut) == 24_000_000 and round(cfg.cutoff(0.02).f_cut) == 11_000_000
    assert math.isclose(cfg.cutoff().delta_time / cfg.dt, 5.0, rel_tol=1e-9)


def write_cfg(tmp_path, text):
    p = tmp_path / "c.ini"
    p.write_text(text)
    return p


MINIMAL = """
[grid]
n = {n}
dt = 1e-8
[law]
alpha0_db_cm_mhz_y = 0.5
exponent_y = 1.5
c0_m_s = 1530
[experiment]
r_list_m = 0.02
snr = 100
"""


def test_config_minimal_defaults(tmp_path):
    cfg = load_config(write_cfg(tmp_path, MINIMAL.format(n=2048)))
    assert cfg.law.dispersion and cfg.dr.lambda_factor == 0.05 and cfg.dr.tau is None
    assert cfg.tsvd_config.snr == 100 and cfg.benchmark.valley == 0.8


def test_config_padding_error(tmp_path):
    with pytest.raises(ConfigError, match="wrap-around"):
        load_config(write_cfg(tmp_path, MINIMAL.format(n=16)))
    assert load_config(write_cfg(tmp_path, MINIMAL.format(n=16)), check_padding=False).n == 16


def test_config_missing_key(tmp_path):
    with pytest.raises(ConfigError, match="missing"):
        load_config(write_cfg(tmp_path, MINIMAL.format(n=2048).replace("snr = 100", "")))
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini")
    with pytest.raises(ConfigError, match="on/off"):
        load_config(write_cfg(tmp_path, MINIMAL.format(n=2048).replace("c0_m_s = 1530", "c0_m_s = 1530\ndispersion = maybe")))


def test_config_invariants():
    with pytest.raises(ConfigError):
        small_cfg(r_list=())
    with pytest.raises(ConfigError):
        small_cfg(r_list=(0.0,))
    with pytest.raises(ConfigError):
        small_cfg(snr=1.0)


def test_wraparound_check_on_default(default_cfg):
    frac = check_wraparound(default_cfg, generate_phantom(default_cfg.phantom, default_cfg))
    assert frac < 1e-8


def test_benchmark_well_separated(bench):
    row = next(r for r in bench.headline_rows() if math.isclose(r.separation_delta, 4.0))
    assert row.tsvd_resolved
    assert row.dr_resolved[20] and row.dr_resolved[200]


def test_benchmark_below_linear_limit(bench):
    row = next(r for r in bench.headline_rows() if math.isclose(r.separation_delta, 0.6))
    assert not row.tsvd_resolved
    assert row.dr_resolved[200]


def test_benchmark_ordering(bench):
    s = bench.summary["smallest_resolved_s"]
    assert s["dr200"] <= s["dr20"] <= s["tsvd"]


def test_benchmark_structure(bench, default_cfg):
    rows = bench.headline_rows()
    seps = [r.separation_s for r in rows]
    assert seps == sorted(seps) and len(set(seps)) == len(seps)
    assert len(bench.rows) == 2 * len(rows)
    assert bench.summary["r"] == default_cfg.r_max
    for row in rows:
        assert math.isclose(row.separation_m, row.separation_s * default_cfg.cutoff().c_at_cut)
        assert row.tsvd_rate == float(row.tsvd_resolved)
    assert set(bench.delta_limit) == {"0.006", "0.02"}


def test_benchmark_summary_consistent(bench):
    rows = bench.headline_rows()
    for method, key in [("tsvd", None), ("dr20", 20), ("dr200", 200)]:
        flags = [r.tsvd_resolved if key is None else r.dr_resolved[key] for r in rows]
        best = bench.summary["smallest_resolved_s"][method]
        i = [r.separation_s for r in rows].index(best)
        assert all(flags[i:]) and (i == 0 or not flags[i - 1])


def test_benchmark_parallel_matches_serial(default_cfg, bench):
    par = run_benchmark(default_cfg, jobs=4)
    assert par.rows == bench.rows and par.summary == bench.summary


def test_benchmark_repeats(default_cfg):
    res = run_benchmark(default_cfg, separations=[0.4 * 45.45e-9, 0.6 * 45.45e-9, 4 * 45.45e-9], repeats=3)
    for row in res.rows:
        assert 0.0 <= row.tsvd_rate <= 1.0
        assert all(v in (0.0, 1 / 3, 2 / 3, 1.0) for v in row.dr_rate.values())
    assert res.config["repeats"] == 3


def test_benchmark_separation_errors(default_cfg):
    d = default_cfg.cutoff().delta_time
    with pytest.raises(ConfigError, match="at least 3"):
        run_benchmark(default_cfg, separations=[0.5 * d, 2 * d])
    with pytest.raises(ConfigError, match="both sides"):
        run_benchmark(default_cfg, separations=[2 * d, 3 * d, 4 * d])
    with pytest.raises(ConfigError, match="collapse"):
        run_benchmark(default_cfg, separations=[0.6 * d, 0.62 * d, 2 * d])
    with pytest.raises(ConfigError):
        run_benchmark(default_cfg, repeats=0)


def test_write_benchmark(tmp_path, bench):
    import json

    csv_path, json_path = write_benchmark(bench, tmp_path)
    header = csv_path.read_text().splitlines()[0].split(",")
    assert header[:7] == ["r_m", "separation_s", "separation_m", "separation_delta", "tsvd_resolved", "tsvd_valley", "tsvd_rate"]
    assert "dr200_resolved" in header
    doc = json.loads(json_path.read_text())
    assert doc["summary"]["smallest_resolved_s"]["dr200"] == bench.summary["smallest_resolved_s"]["dr200"]
    assert len(doc["rows"]) == len(bench.rows)


def test_emit_plot_data_normalizes(tmp_path):
    s = Signal(np.array([0.0, 5.0, 2.5, -1.0]), 1.0)
    path, svg = emit_plot_data({"a": s}, tmp_path / "p.csv")
    header, data = read_plot_csv(path)
    assert header == ["t", "a"]
    assert np.max(data[:, 1]) == 1.0
    assert svg.read_text().startswith("<svg")


def test_emit_plot_data_columns_and_read_back(tmp_path, rng):
    sigs = {f"s{k}": Signal(rng.standard_normal(50) + 3, 1e-8, 1e-6) for k in range(3)}
    path, _ = emit_plot_data(sigs, tmp_path / "p.csv")
    header, data = read_plot_csv(path)
    assert len(header) == len(sigs) + 1 and data.shape == (50, 4)
    np.testing.assert_array_equal(data[:, 0], sigs["s0"].times)
    for k, (label, s) in enumerate(sigs.items(), start=1):
        assert header[k] == label
        np.testing.assert_array_equal(data[:, k], s.samples / np.max(s.samples))


def test_emit_plot_data_window(tmp_path, rng):
    s = Signal(rng.uniform(0.1, 1, 100), 1.0)
    _, data = read_plot_csv(emit_plot_data({"x": s}, tmp_path / "p.csv", (10, 20))[0])
    assert data.shape == (10, 2) and data[0, 0] == 10.0


def test_emit_plot_data_rejects_zero_column(tmp_path):
    with pytest.raises(SignalError, match="'flat'"):
        emit_plot_data({"ok": Signal(np.ones(4), 1.0), "flat": Signal(np.zeros(4), 1.0)}, tmp_path / "p.csv")
    with pytest.raises(ValueError):
        emit_plot_data({}, tmp_path / "p.csv")
