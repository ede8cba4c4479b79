"""Monte Carlo study of air-gap recovery from noisy torque-voltage data."""

import argparse
import dataclasses

import numpy as np

from muxsim.calibration import TorqueVoltagePoint, fit_air_gap, holding_torque_curve
from muxsim.clutch import ClutchParams


def trial(truth, volts, noise, rng, start_gap):
    clean = holding_torque_curve(truth, volts)
    noisy = clean * (1.0 + noise * rng.standard_normal(len(volts)))
    data = [TorqueVoltagePoint(float(v), float(t)) for v, t in zip(volts, noisy)]
    fit = fit_air_gap(data, dataclasses.replace(truth, air_gap_m=start_gap))
    return fit.params.air_gap_m


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--noise", type=float, default=0.02)
    ap.add_argument("--start-gap", type=float, default=2e-6)
    args = ap.parse_args()

    truth = ClutchParams()
    volts = np.linspace(100.0, 900.0, 17)
    gaps = np.array([
        trial(truth, volts, args.noise, np.random.default_rng(s), args.start_gap) for s in range(args.seeds)
    ])
    rel = np.abs(gaps / truth.air_gap_m - 1.0)
    print(f"seeds {args.seeds}, noise {args.noise:.1%}")
    print(f"median |error| {np.median(rel):.3%}, worst {rel.max():.3%}")
    print(f"within 5 %: {(rel <= 0.05).sum()} / {args.seeds}")


if __name__ == "__main__":
    main()
