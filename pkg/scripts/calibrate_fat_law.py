"""Derive the shipped fat-like attenuation law from a pair of noise-limited cut-offs.

Given cut-offs f1 at distance r1 and f2 at r2 (same SNR), the power law
alpha0 |w|^y with alpha(w_cut) r = ln(snr) fixes both parameters.  Prints
the values used in configs/fat_default.ini and checks them.
"""

import argparse
import math

from paresolve.attenuation import AttenuationLaw
from paresolve.operator import near_unity_deviation
from paresolve.resolution import cutoff_frequency, implied_exponent


def calibrate(f1, r1, f2, r2, snr, c0, f_ref, dispersion=True):
    y = implied_exponent(f1, r1, f2, r2)
    alpha0 = math.log(snr) / (r1 * (2 * math.pi * f1) ** y)
    return AttenuationLaw(alpha0, y, c0, 2 * math.pi * f_ref, dispersion)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--f1", type=float, default=24e6)
    ap.add_argument("--r1", type=float, default=0.006)
    ap.add_argument("--f2", type=float, default=11e6)
    ap.add_argument("--r2", type=float, default=0.020)
    ap.add_argument("--snr", type=float, default=100.0)
    ap.add_argument("--c0", type=float, default=1530.0)
    ap.add_argument("--f-ref", type=float, default=1e6)
    args = ap.parse_args()
    law = calibrate(args.f1, args.r1, args.f2, args.r2, args.snr, args.c0, args.f_ref)
    print(f"exponent_y = {law.y!r}")
    print(f"alpha0_db_cm_mhz_y = {law.alpha_db_cm_mhz_y!r}")
    print(f"alpha0 [Np m^-1 (rad/s)^-y] = {law.alpha0!r}")
    for r in (args.r1, args.r2):
        rep = cutoff_frequency(law, r, args.snr)
        print(f"r = {r * 1e3:g} mm: f_cut = {rep.f_cut / 1e6:.6f} MHz, c = {rep.c_at_cut:.2f} m/s, "
              f"delta = {rep.delta_space * 1e6:.2f} um / {rep.delta_time * 1e9:.2f} ns")
    print(f"max |w/(c0 K) - 1| over 30-71 MHz = {near_unity_deviation(law, 30e6, 71e6):.4f}")


if __name__ == "__main__":
    main()
