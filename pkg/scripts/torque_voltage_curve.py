"""Holding torque versus voltage for a few air gaps, written as CSV on stdout."""

import argparse
import dataclasses
import sys

import numpy as np

from muxsim.calibration import holding_torque_curve
from muxsim.clutch import ClutchParams


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--gaps-um", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--points", type=int, default=46)
    args = ap.parse_args()

    base = ClutchParams()
    volts = np.linspace(0.0, base.voltage_ceiling_V, args.points)
    curves = [holding_torque_curve(dataclasses.replace(base, air_gap_m=g * 1e-6), volts) for g in args.gaps_um]
    out = sys.stdout
    out.write("voltage_V," + ",".join(f"torque_Nm_gap{g:g}um" for g in args.gaps_um) + "\n")
    for i, v in enumerate(volts):
        out.write(f"{v:.1f}," + ",".join(f"{c[i]:.6f}" for c in curves) + "\n")


if __name__ == "__main__":
    main()
