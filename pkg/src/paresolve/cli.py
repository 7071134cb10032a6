"""Command line interface: ``paresolve {simulate,cutoff,reconstruct,benchmark,plotdata}``.

Output files (all under ``--out DIR``):

simulate     phantom.csv, measurement_<r>mm.csv, operator_<r>mm.csv
cutoff       cutoff.json (only with --out; the report always goes to stdout)
reconstruct  reconstruction.csv, diagnostics.csv
benchmark    benchmark.csv, benchmark.json
plotdata     plot.csv + plot.svg for --input files; fig2.* and fig3.* for --config

Failures exit with status 1 and print one JSON line ``{"error": ..., "type": ...}``
to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import experiment as ex
from .attenuation import AttenuationLaw
from .operator import build_operator, export_operator_csv, near_unity_deviation
from .resolution import cutoff_frequency
from .signal import read_signal_csv, write_signal_csv
from .solvers import DrConfig, TsvdConfig, dr_reconstruct, tsvd_reconstruct


def _out_dir(args, cfg=None) -> Path:
    out = Path(args.out if args.out else (cfg.out if cfg else "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _mm(r: float) -> str:
    return f"{r * 1e3:g}mm"


def cmd_simulate(args):
    cfg = ex.load_config(args.config)
    out = _out_dir(args, cfg)
    ph = ex.generate_phantom(cfg.phantom, cfg)
    write_signal_csv(ph, out / "phantom.csv")
    for r, s in ex.run_forward(cfg, ph).items():
        write_signal_csv(s, out / f"measurement_{_mm(r)}.csv")
        export_operator_csv(cfg.operator(r), out / f"operator_{_mm(r)}.csv")
    print(f"wrote {out}")


def _law_from_args(args) -> AttenuationLaw:
    if args.config:
        return ex.load_config(args.config, check_padding=False).law
    if args.alpha_db is None or args.y is None:
        raise ex.ConfigError("cutoff needs --config or both --alpha-db and --y")
    return AttenuationLaw.from_db(args.alpha_db, args.y, args.c0, args.f_ref, args.dispersion == "on")


def cmd_cutoff(args):
    law = _law_from_args(args)
    cfg = ex.load_config(args.config, check_padding=False) if args.config else None
    rs = [args.r] if args.r is not None else (sorted(cfg.r_list) if cfg else None)
    snr = args.snr if args.snr is not None else (cfg.snr if cfg else None)
    if rs is None or snr is None:
        raise ex.ConfigError("cutoff needs --r and --snr (or a config providing them)")
    if args.verbose:
        print(law.conversion_text())
        print(f"max |w/(c0 K) - 1| over 30-71 MHz = {near_unity_deviation(law, 30e6, 71e6):.3e}")
    reports = [cutoff_frequency(law, r, snr) for r in rs]
    for rep in reports:
        if args.json:
            print(json.dumps(rep.as_dict(), sort_keys=True))
        else:
            print(rep.as_text())
            if len(reports) > 1:
                print()
    if args.out:
        out = _out_dir(args)
        (out / "cutoff.json").write_text(json.dumps([r.as_dict() for r in reports], indent=2, sort_keys=True) + "\n")


def cmd_reconstruct(args):
    cfg = ex.load_config(args.config, check_padding=False)
    p = read_signal_csv(args.input)
    r = args.r if args.r is not None else cfg.r_max
    op = build_operator(cfg.law, r, p.n, p.dt, cfg.impulse_response(), p.t0)
    if args.method == "tsvd":
        tcfg = cfg.tsvd_config if args.snr is None else TsvdConfig(snr=args.snr)
        res = tsvd_reconstruct(op, p, tcfg)
    else:
        d = cfg.dr
        dcfg = DrConfig(
            lam=args.lam if args.lam is not None else d.lam,
            tau=args.tau if args.tau is not None else d.tau,
            relaxation=args.relaxation if args.relaxation is not None else d.relaxation,
            max_iters=args.iters if args.iters is not None else d.max_iters,
            tol=args.tol if args.tol is not None else d.tol,
            lambda_factor=d.lambda_factor,
        )
        res = dr_reconstruct(op, p, dcfg)
    out = _out_dir(args, cfg)
    write_signal_csv(res.reconstruction, out / "reconstruction.csv")
    with (out / "diagnostics.csv").open("w") as fh:
        fh.write("iter,residual,objective,fp_residual\n")
        for k in range(res.iterations_run):
            fh.write(
                f"{k + 1},{res.residual_norm_history[k]:.17g},{res.objective_history[k]:.17g},"
                f"{res.fixed_point_residual_history[k]:.17g}\n"
            )
    for key, val in sorted(res.info.items()):
        print(f"{key}={val}")


def cmd_benchmark(args):
    cfg = ex.load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    res = ex.run_benchmark(cfg, repeats=args.repeats, jobs=args.jobs)
    out = _out_dir(args, cfg)
    ex.write_benchmark(res, out)
    for method, sep in res.summary["smallest_resolved_s"].items():
        text = "none" if sep is None else f"{sep:.6g} s ({sep / cfg.cutoff().delta_time:.3g} x delta)"
        print(f"{method}: smallest resolved separation = {text}")


def cmd_plotdata(args):
    out = _out_dir(args)
    if args.config:
        cfg = ex.load_config(args.config)
        figs = ex.figure_signals(cfg)
        half = int(round(args.window / cfg.dt / 2)) if args.window else cfg.n // 2
        c = cfg.n // 2
        win = (max(c - half, 0), min(c + half, cfg.n))
        for name, sigs in figs.items():
            ex.emit_plot_data(sigs, out / f"{name}.csv", win)
    if args.input:
        labels = args.label or [Path(p).stem for p in args.input]
        if len(labels) != len(args.input):
            raise ValueError("give one --label per --input")
        sigs = {lab: read_signal_csv(p) for lab, p in zip(labels, args.input)}
        ex.emit_plot_data(sigs, out / "plot.csv")
    if not args.config and not args.input:
        raise ValueError("plotdata needs --config and/or --input")
    print(f"wrote {out}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="paresolve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="phantom and noisy measurements per distance")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("cutoff", parents=[common], help="cut-off frequency and resolution limit")
    p.add_argument("--config")
    p.add_argument("--alpha-db", type=float, help="attenuation in dB/cm/MHz^y")
    p.add_argument("--y", type=float)
    p.add_argument("--c0", type=float, default=1540.0)
    p.add_argument("--f-ref", type=float, default=1e6)
    p.add_argument("--dispersion", choices=("on", "off"), default="on")
    p.add_argument("--r", type=float, help="distance in m")
    p.add_argument("--snr", type=float)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_cutoff)

    p = sub.add_parser("reconstruct", parents=[common], help="compensate attenuation in a measured signal")
    p.add_argument("--config", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--r", type=float)
    p.add_argument("--method", choices=("tsvd", "dr"), default="tsvd")
    p.add_argument("--snr", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--relaxation", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("benchmark", parents=[common], help="two-source resolution benchmark")
    p.add_argument("--config", required=True)
    p.add_argument("--repeats", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("plotdata", parents=[common], help="normalized plot data (CSV + SVG)")
    p.add_argument("--config")
    p.add_argument("--input", action="append")
    p.add_argument("--label", action="append")
    p.add_argument("--window", type=float, help="time span around the grid centre in s (config mode)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except Exception as err:  # noqa: BLE001 - reported as a machine-readable line
        print(json.dumps({"error": str(err), "type": type(err).__name__}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
