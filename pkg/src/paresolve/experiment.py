"""Experiment configuration, phantoms, forward simulation and the two-source benchmark.

Config files are flat INI files (``configparser``).  Every key is listed in
``configs/fat_default.ini``; the README documents them.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .attenuation import AttenuationLaw
from .operator import ForwardOperator, build_operator, wraparound_fraction
from .resolution import (
    PEAK_THRESHOLD,
    VALLEY_RATIO,
    ResolutionReport,
    SeparabilityVerdict,
    cutoff_frequency,
    separability,
)
from .signal import NoiseModel, Signal, SignalError, add_noise, read_signal_csv
from .solvers import DrConfig, TsvdConfig, dr_reconstruct, tsvd_reconstruct

__all__ = [
    "ConfigError",
    "PhantomSpec",
    "BenchmarkSettings",
    "ExperimentConfig",
    "BenchmarkRow",
    "BenchmarkResult",
    "load_config",
    "generate_phantom",
    "noise_reference",
    "run_forward",
    "run_benchmark",
    "figure_signals",
    "emit_plot_data",
    "read_plot_csv",
    "write_benchmark",
    "MAX_WRAPAROUND",
]

MAX_WRAPAROUND = 1e-8


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PhantomSpec:
    """Initial-pressure phantom; amplitudes are areas (unit-area impulses)."""

    kind: str = "single-delta"
    positions: tuple = ()
    amplitudes: tuple = (1.0,)
    width: float | None = None
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("single-delta", "two-delta", "from-file"):
            raise ConfigError(f"unknown phantom kind {self.kind!r}")
        if any(a < 0 for a in self.amplitudes):
            raise ConfigError("phantom amplitudes must be nonnegative")
        if self.width is not None and not self.width > 0:
            raise ConfigError(f"smoothing width must be positive, got {self.width}")
        if self.kind == "from-file" and not self.path:
            raise ConfigError("from-file phantom needs a path")


@dataclass(frozen=True)
class BenchmarkSettings:
    separations_delta: tuple = (0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 2.0, 2.4, 3.0, 4.0)
    threshold: float = PEAK_THRESHOLD
    valley: float = VALLEY_RATIO
    repeats: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    dt: float
    law: AttenuationLaw
    r_list: tuple
    snr: float
    t0: float = 0.0
    phantom: PhantomSpec = field(default_factory=PhantomSpec)
    tsvd: TsvdConfig | None = None
    dr: DrConfig = field(default_factory=DrConfig)
    dr_iterations: tuple = (20, 200)
    benchmark: BenchmarkSettings = field(default_factory=BenchmarkSettings)
    seed: int = 0
    out: str = "out"
    ir_path: str | None = None

    def __post_init__(self):
        if self.n < 2 or not self.dt > 0:
            raise ConfigError(f"invalid grid N={self.n}, dt={self.dt}")
        if not self.r_list or any(not r > 0 for r in self.r_list):
            raise ConfigError("r_list must be nonempty with all distances > 0")
        if not self.snr > 1:
            raise ConfigError(f"snr must exceed 1, got {self.snr}")

    @property
    def r_max(self) -> float:
        return max(self.r_list)

    @property
    def tsvd_config(self) -> TsvdConfig:
        return self.tsvd or TsvdConfig(snr=self.snr)

    def impulse_response(self) -> Signal | None:
        if self.ir_path is None:
            return None
        ir = read_signal_csv(self.ir_path)
        if ir.n != self.n or ir.dt != self.dt:
            raise ConfigError("impulse response is not on the experiment grid")
        return ir

    def operator(self, r: float) -> ForwardOperator:
        return build_operator(self.law, r, self.n, self.dt, self.impulse_response(), self.t0)

    def cutoff(self, r: float | None = None) -> ResolutionReport:
        return cutoff_frequency(self.law, self.r_max if r is None else r, self.snr)


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _onoff(text: str) -> bool:
    t = text.strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"expected on/off, got {text!r}")


def load_config(path, check_padding: bool = True) -> ExperimentConfig:
    """Parse an INI experiment file and check circular wrap-around."""
    path = Path(path)
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigError(f"cannot read config {path}")
    base = path.parent

    def rel(p):
        q = Path(p)
        return str(q if q.is_absolute() else base / q)

    try:
        g, lw, ex = cp["grid"], cp["law"], cp["experiment"]
        law = AttenuationLaw.from_db(
            lw.getfloat("alpha0_db_cm_mhz_y"),
            lw.getfloat("exponent_y"),
            lw.getfloat("c0_m_s"),
            lw.getfloat("f_ref_hz", fallback=1e6),
            _onoff(lw.get("dispersion", "on")),
        )
        ph = cp["phantom"] if cp.has_section("phantom") else {}
        phantom = PhantomSpec(
            kind=ph.get("kind", "single-delta"),
            positions=_floats(ph.get("positions_s", "")),
            amplitudes=_floats(ph.get("amplitudes", "1")),
            width=float(ph["width_s"]) if ph.get("width_s") else None,
            path=rel(ph["path"]) if ph.get("path") else None,
        )
        tsvd = None
        if cp.has_section("tsvd"):
            ts = cp["tsvd"]
            if ts.get("snr") or ts.get("explicit_cut_rad_s"):
                tsvd = TsvdConfig(
                    snr=ts.getfloat("snr", fallback=ex.getfloat("snr")),
                    explicit_cut=ts.getfloat("explicit_cut_rad_s") if ts.get("explicit_cut_rad_s") else None,
                )
        dr = cp["dr"] if cp.has_section("dr") else {}
        iters = tuple(int(v) for v in _floats(dr.get("iterations", "20 200")))
        drc = DrConfig(
            lam=float(dr["lambda"]) if dr.get("lambda") else None,
            tau=float(dr["tau"]) if dr.get("tau") else None,
            relaxation=float(dr.get("relaxation", 1.0)),
            max_iters=max(iters),
            tol=float(dr.get("tol", 1e-8)),
            lambda_factor=float(dr.get("lambda_factor", 0.05)),
        )
        bm = cp["benchmark"] if cp.has_section("benchmark") else {}
        bench = BenchmarkSettings(
            separations_delta=_floats(bm["separations_delta"]) if bm.get("separations_delta") else BenchmarkSettings.separations_delta,
            threshold=float(bm.get("threshold", PEAK_THRESHOLD)),
            valley=float(bm.get("valley", VALLEY_RATIO)),
            repeats=int(bm.get("repeats", 1)),
        )
        ir = cp["impulse_response"].get("path") if cp.has_section("impulse_response") else None
        cfg = ExperimentConfig(
            n=g.getint("n"),
            dt=g.getfloat("dt"),
            t0=g.getfloat("t0", fallback=0.0),
            law=law,
            r_list=_floats(ex["r_list_m"]),
            snr=float(ex["snr"]),
            phantom=phantom,
            tsvd=tsvd,
            dr=drc,
            dr_iterations=iters,
            benchmark=bench,
            seed=ex.getint("seed", fallback=0),
            out=ex.get("out", "out"),
            ir_path=rel(ir) if ir else None,
        )
    except KeyError as err:
        raise ConfigError(f"missing config entry {err}") from None
    if check_padding:
        check_wraparound(cfg, generate_phantom(cfg.phantom, cfg))
    return cfg


def _grid_times(cfg: ExperimentConfig) -> np.ndarray:
    return cfg.t0 + np.arange(cfg.n) * cfg.dt


def centre_time(cfg: ExperimentConfig) -> float:
    return cfg.t0 + (cfg.n // 2) * cfg.dt


def generate_phantom(spec: PhantomSpec, cfg: ExperimentConfig) -> Signal:
    """Sum of unit-area impulses (or Gaussians of std ``spec.width``).

    Without explicit positions a single source sits at the grid centre.
    """
    if spec.kind == "from-file":
        s = read_signal_csv(spec.path)
        if s.n != cfg.n or s.dt != cfg.dt:
            raise ConfigError("phantom file is not on the experiment grid")
        if np.any(s.samples < 0):
            raise ConfigError("phantom file has negative samples")
        return s
    positions = spec.positions or (centre_time(cfg),)
    amps = spec.amplitudes
    if len(amps) == 1 and len(positions) > 1:
        amps = amps * len(positions)
    expected = 1 if spec.kind == "single-delta" else 2
    if len(positions) != expected or len(amps) != expected:
        raise ConfigError(f"{spec.kind} phantom needs {expected} position(s) and amplitude(s)")
    t = _grid_times(cfg)
    lo, hi = t[0], t[-1]
    for p in positions:
        if not lo <= p <= hi:
            raise ConfigError(f"phantom position {p!r} s lies outside the grid [{lo!r}, {hi!r}]")
    x = np.zeros(cfg.n)
    if spec.width is None:
        idx = [int(round((p - cfg.t0) / cfg.dt)) for p in positions]
        if len(set(idx)) != len(idx):
            raise ConfigError("phantom sources collide on one grid point (separation below dt)")
        for i, a in zip(idx, amps):
            x[i] += a / cfg.dt
    else:
        w = spec.width
        for p, a in zip(positions, amps):
            x += a * np.exp(-0.5 * ((t - p) / w) ** 2) / (w * math.sqrt(2 * math.pi))
    return Signal(x, cfg.dt, cfg.t0)


def check_wraparound(cfg: ExperimentConfig, phantom: Signal, r: float | None = None) -> float:
    frac = wraparound_fraction(cfg.law, cfg.r_max if r is None else r, phantom, cfg.impulse_response())
    if frac >= MAX_WRAPAROUND:
        raise ConfigError(
            f"grid too short: circular wrap-around energy fraction {frac:.3e} >= {MAX_WRAPAROUND:g}; "
            "increase n or centre the phantom"
        )
    return frac


def noise_reference(phantom: Signal) -> float:
    """Unattenuated spectral peak expressed as a time-domain noise scale.

    White noise of std ``s`` has per-bin DFT magnitude ``s sqrt(N)``, so
    ``max|X_j| / sqrt(N)`` divided by the SNR puts the spectral noise floor
    exactly ``snr`` below the unattenuated spectral peak.
    """
    return float(np.max(np.abs(np.fft.fft(phantom.samples)))) / math.sqrt(phantom.n)


def _seed(cfg_seed: int, k: int) -> int:
    return cfg_seed + 7919 * k


def run_forward(cfg: ExperimentConfig, phantom: Signal, seed: int | None = None) -> dict:
    """Noisy measurement for each distance in ``cfg.r_list``, keyed by ``r``."""
    base = cfg.seed if seed is None else seed
    ref = noise_reference(phantom)
    out = {}
    for k, r in enumerate(cfg.r_list):
        op = cfg.operator(r)
        clean = phantom.with_samples(op.forward_array(phantom.samples))
        out[r] = add_noise(clean, NoiseModel(cfg.snr, _seed(base, k)), ref)
    return out


@dataclass(frozen=True)
class BenchmarkRow:
    r: float
    separation_s: float
    separation_m: float
    separation_delta: float
    tsvd_resolved: bool
    tsvd_valley: float
    tsvd_rate: float
    dr_resolved: dict
    dr_valley: dict
    dr_rate: dict


@dataclass(frozen=True)
class BenchmarkResult:
    rows: list
    summary: dict
    delta_limit: dict
    config: dict

    def headline_rows(self):
        r = self.summary["r"]
        return [row for row in self.rows if row.r == r]


def _roi_verdict(s: Signal, first: int, last: int, margin: int, settings: BenchmarkSettings) -> SeparabilityVerdict:
    # restrict the peak search to the source pair plus a margin of one resolution limit
    lo = max(first - margin, 0)
    hi = min(last + margin + 1, s.n)
    return separability(Signal(s.samples[lo:hi], s.dt, s.t0 + lo * s.dt), settings.threshold, settings.valley)


def _smallest_resolved(seps, flags):
    # smallest grid separation from which every larger one is resolved
    best = None
    for sep, ok in zip(reversed(seps), reversed(flags)):
        if not ok:
            break
        best = sep
    return best


def run_benchmark(cfg: ExperimentConfig, separations=None, repeats: int | None = None, jobs: int = 1) -> BenchmarkResult:
    """Two-source resolution test for T-SVD and DR at every distance.

    ``separations`` are times in seconds; by default the configured
    multiples of the linear limit at the largest distance.  Each
    (distance, separation, seed) cell is independent.
    """
    repeats = cfg.benchmark.repeats if repeats is None else repeats
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    head = cfg.cutoff(cfg.r_max)
    if separations is None:
        separations = [k * head.delta_time for k in cfg.benchmark.separations_delta]
    separations = sorted(float(s) for s in separations)
    if len(separations) < 3:
        raise ConfigError("benchmark needs at least 3 separations")
    if not (separations[0] < head.delta_time < separations[-1]):
        raise ConfigError("separations must span both sides of the linear resolution limit")
    c = cfg.n // 2
    steps = [int(round(s / cfg.dt)) for s in separations]
    if any(b <= a for a, b in zip(steps, steps[1:])) or steps[0] < 1:
        raise ConfigError("separations collapse on the sampling grid; refine dt")
    margin = max(1, int(round(head.delta_time / cfg.dt)))
    ops = {r: cfg.operator(r) for r in cfg.r_list}
    iters = tuple(sorted(cfg.dr_iterations))

    def cell(key):
        r, step, rep = key
        spec = PhantomSpec("two-delta", (centre_time(cfg), centre_time(cfg) + step * cfg.dt), (1.0, 1.0))
        ph = generate_phantom(spec, cfg)
        op = ops[r]
        ref = noise_reference(ph)
        clean = ph.with_samples(op.forward_array(ph.samples))
        k = cfg.r_list.index(r)
        p = add_noise(clean, NoiseModel(cfg.snr, _seed(cfg.seed + 104729 * rep, k)), ref)
        out = {"tsvd": _roi_verdict(tsvd_reconstruct(op, p, cfg.tsvd_config).reconstruction, c, c + step, margin, cfg.benchmark)}
        for it in iters:
            rec = dr_reconstruct(op, p, replace(cfg.dr, max_iters=it)).reconstruction
            out[f"dr{it}"] = _roi_verdict(rec, c, c + step, margin, cfg.benchmark)
        return key, out

    keys = [(r, st, rep) for r in cfg.r_list for st in steps for rep in range(repeats)]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            cells = dict(pool.map(cell, keys))
    else:
        cells = dict(map(cell, keys))

    rows = []
    for r in sorted(cfg.r_list):
        rep_r = cfg.cutoff(r)
        for st in steps:
            verdicts = [cells[(r, st, rep)] for rep in range(repeats)]
            base = verdicts[0]
            sep = st * cfg.dt
            rows.append(
                BenchmarkRow(
                    r=r,
                    separation_s=sep,
                    separation_m=sep * rep_r.c_at_cut,
                    separation_delta=sep / rep_r.delta_time,
                    tsvd_resolved=base["tsvd"].resolved,
                    tsvd_valley=base["tsvd"].valley_ratio,
                    tsvd_rate=sum(v["tsvd"].resolved for v in verdicts) / repeats,
                    dr_resolved={it: base[f"dr{it}"].resolved for it in iters},
                    dr_valley={it: base[f"dr{it}"].valley_ratio for it in iters},
                    dr_rate={it: sum(v[f"dr{it}"].resolved for v in verdicts) / repeats for it in iters},
                )
            )
    head_rows = [row for row in rows if row.r == cfg.r_max]
    seps = [row.separation_s for row in head_rows]
    summary = {
        "r": cfg.r_max,
        "smallest_resolved_s": {
            "tsvd": _smallest_resolved(seps, [row.tsvd_resolved for row in head_rows]),
            **{f"dr{it}": _smallest_resolved(seps, [row.dr_resolved[it] for row in head_rows]) for it in iters},
        },
    }
    delta = {f"{r:g}": asdict(cfg.cutoff(r)) for r in sorted(cfg.r_list)}
    meta = {
        "n": cfg.n,
        "dt": cfg.dt,
        "snr": cfg.snr,
        "seed": cfg.seed,
        "repeats": repeats,
        "dr_iterations": list(iters),
        "dr_tau": cfg.dr.tau,
        "dr_relaxation": cfg.dr.relaxation,
        "dr_lambda_factor": cfg.dr.lambda_factor,
        "threshold": cfg.benchmark.threshold,
        "valley": cfg.benchmark.valley,
    }
    return BenchmarkResult(rows, summary, delta, meta)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if v is None:
        return ""
    return f"{v:.17g}"


def write_benchmark(result: BenchmarkResult, out_dir) -> tuple:
    """Write ``benchmark.csv`` and ``benchmark.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    iters = result.config["dr_iterations"]
    header = ["r_m", "separation_s", "separation_m", "separation_delta", "tsvd_resolved", "tsvd_valley", "tsvd_rate"]
    for it in iters:
        header += [f"dr{it}_resolved", f"dr{it}_valley", f"dr{it}_rate"]
    csv_path = out / "benchmark.csv"
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in result.rows:
            vals = [row.r, row.separation_s, row.separation_m, row.separation_delta, row.tsvd_resolved, row.tsvd_valley, row.tsvd_rate]
            for it in iters:
                vals += [row.dr_resolved[it], row.dr_valley[it], row.dr_rate[it]]
            w.writerow([_fmt(v) for v in vals])

    def clean(v):
        return None if isinstance(v, float) and math.isnan(v) else v

    doc = {
        "config": result.config,
        "delta_limit": result.delta_limit,
        "summary": result.summary,
        "rows": [
            {
                "r_m": row.r,
                "separation_s": row.separation_s,
                "separation_m": row.separation_m,
                "separation_delta": row.separation_delta,
                "tsvd": {"resolved": row.tsvd_resolved, "valley_ratio": clean(row.tsvd_valley), "rate": row.tsvd_rate},
                **{
                    f"dr{it}": {"resolved": row.dr_resolved[it], "valley_ratio": clean(row.dr_valley[it]), "rate": row.dr_rate[it]}
                    for it in iters
                },
            }
            for row in result.rows
        ],
    }
    json_path = out / "benchmark.json"
    json_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def figure_signals(cfg: ExperimentConfig) -> dict:
    """Reconstructions of a single centred source, for the two figure panels.

    ``fig2``: the ideal pulse and T-SVD at every distance.
    ``fig3``: T-SVD and DR at each iteration count at the largest distance.
    """
    ph = generate_phantom(PhantomSpec(), cfg)
    meas = run_forward(cfg, ph)
    fig2 = {"ideal": ph}
    for r in sorted(cfg.r_list):
        fig2[f"tsvd_{r * 1e3:g}mm"] = tsvd_reconstruct(cfg.operator(r), meas[r], cfg.tsvd_config).reconstruction
    op = cfg.operator(cfg.r_max)
    p = meas[cfg.r_max]
    fig3 = {"tsvd": tsvd_reconstruct(op, p, cfg.tsvd_config).reconstruction}
    for it in sorted(cfg.dr_iterations):
        fig3[f"dr_{it}"] = dr_reconstruct(op, p, replace(cfg.dr, max_iters=it)).reconstruction
    return {"fig2": fig2, "fig3": fig3}


_SVG_COLOURS = ("#1f77b4", "#d62728", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b")


def _svg(times: np.ndarray, columns: dict, path: Path, width=800, height=400):
    # one polyline per column, x = time, y = normalized value in [-1, 1]
    pad = 40
    t0, t1 = float(times[0]), float(times[-1])
    span = t1 - t0 or 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height / 2}" x2="{width - pad}" y2="{height / 2}" stroke="#999" stroke-width="0.5"/>',
    ]
    for k, (label, y) in enumerate(columns.items()):
        xs = pad + (times - t0) / span * (width - 2 * pad)
        ys = height / 2 - y * (height / 2 - pad)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(xs, ys))
        colour = _SVG_COLOURS[k % len(_SVG_COLOURS)]
        parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1" points="{pts}"/>')
        parts.append(f'<text x="{width - pad - 150}" y="{pad + 14 * k}" font-size="12" fill="{colour}">{label}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def emit_plot_data(signals: dict, path, window: tuple | None = None) -> tuple:
    """Write normalized columns to ``path`` (CSV) and a sibling ``.svg`` plot.

    Each signal is divided by its maximum.  ``window`` optionally restricts
    the written rows to a ``(start, stop)`` index range.
    """
    if not signals:
        raise ValueError("no signals to emit")
    items = list(signals.items())
    first = items[0][1]
    cols = {}
    for label, s in items:
        first.check_grid(s)
        peak = float(np.max(s.samples))
        if not peak > 0:
            raise SignalError(f"cannot normalize column {label!r}: maximum is {peak!r}")
        cols[label] = s.samples / peak
    lo, hi = window or (0, first.n)
    times = first.times[lo:hi]
    cols = {k: v[lo:hi] for k, v in cols.items()}
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(["t", *cols]) + "\n")
        for i, t in enumerate(times):
            fh.write(",".join([f"{t:.17g}", *(f"{c[i]:.17g}" for c in cols.values())]) + "\n")
    svg = path.with_suffix(".svg")
    _svg(times, cols, svg)
    return path, svg


def read_plot_csv(path) -> tuple:
    """Return ``(header, array)`` for a file written by :func:`emit_plot_data`."""
    with Path(path).open() as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data
