"""Run the bundled SISO and SIMO scenarios and compare makespan and energy.

    python scripts/run_multiplexing.py [--out results/] [--dt 0.001]
"""

import argparse
import dataclasses
from pathlib import Path

from muxsim.cli import build_schedule
from muxsim.fileio import energy_text, trace_csv, write_outputs
from muxsim.scenario import load_scenario
from muxsim.sim import run


def simulate(name, dt):
    sc = load_scenario(name)
    if dt is not None:
        sc.sim = dataclasses.replace(sc.sim, dt_s=dt)
    schedule = build_schedule(sc)
    trace, energy = run(schedule, sc.build_units(), sc.motor, sc.sim, sc.clutch, sc.loss, sc.latency)
    return schedule, trace, energy


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=None)
    ap.add_argument("--dt", type=float, default=None)
    args = ap.parse_args()

    print(f"{'scenario':<16} {'makespan_s':>10} {'E_in_J':>9} {'E_out_J':>8} {'eff':>7}")
    for name in ("siso_4x2270g", "simo_staircase"):
        schedule, trace, energy = simulate(name, args.dt)
        print(f"{name:<16} {schedule.horizon_s:10.3f} {energy.input_energy_J:9.4f} "
              f"{energy.output_energy_J:8.4f} {energy.efficiency:7.2%}")
        if args.out:
            write_outputs(args.out / name, {"trace.csv": trace_csv(trace), "energy.txt": energy_text(energy)})


if __name__ == "__main__":
    main()
