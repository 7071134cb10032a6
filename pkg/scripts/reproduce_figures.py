"""Plot data for the single-source reconstructions.

fig2: ideal pulse and T-SVD reconstructions at each distance.
fig3: T-SVD and DR (each configured iteration count) at the largest distance.
Writes CSV + SVG and prints the pulse widths of every curve.
"""

import argparse
from pathlib import Path

from paresolve.experiment import emit_plot_data, figure_signals, load_config
from paresolve.resolution import ResolutionError, fwhm, zero_crossing_width

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=ROOT / "configs" / "fat_default.ini")
    ap.add_argument("--window", type=float, default=1e-6, help="plotted span in s around the source")
    ap.add_argument("--out", default="out/figures")
    args = ap.parse_args()
    cfg = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    half = int(round(args.window / cfg.dt / 2))
    win = (cfg.n // 2 - half, cfg.n // 2 + half)
    f_cut = {r: cfg.cutoff(r).f_cut for r in cfg.r_list}
    for name, sigs in figure_signals(cfg).items():
        csv_path, svg_path = emit_plot_data(sigs, out / f"{name}.csv", win)
        print(f"{name}: {csv_path}, {svg_path}")
        for label, s in sigs.items():
            if label == "ideal":
                continue
            r = float(label.split("_")[1][:-2]) / 1e3 if label.startswith("tsvd_") else cfg.r_max
            try:
                zc = f"{zero_crossing_width(s) * f_cut[r]:.3f}"
            except ResolutionError:
                zc = "n/a"
            print(f"  {label:10s} FWHM * f_cut = {fwhm(s) * f_cut[r]:.3f}, zero-crossing width * f_cut = {zc}")


if __name__ == "__main__":
    main()
