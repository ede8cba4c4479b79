"""Command-line entry point.

Exit codes: 0 success, 2 malformed input, 3 physics or planning fault,
4 fit failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from pathlib import Path

import numpy as np
import tomli_w

from .calibration import FitError, fit_air_gap, fit_loss_model, holding_torque_curve
from .clutch import (
    ClutchParams, electrostatic_pressure, engagement_time_constant, max_clutching_power,
    torque_capacity,
)
from .drivetrain import required_shaft_torque, self_locks, transmission_efficiency
from .fileio import (
    DataError, energy_text, events_csv, parse_timeline, read_efficiency_csv,
    read_torque_voltage_csv, timeline_text, trace_csv, write_outputs,
)
from .logic import BrakingPolicyError, PhysicsFault, switch_latency
from .scenario import Scenario, ScenarioError, load_scenario
from .scheduler import PlanningError, Schedule, plan_simo, plan_siso, validate_schedule
from .sim import run

EXIT_OK, EXIT_INPUT, EXIT_PHYSICS, EXIT_FIT = 0, 2, 3, 4


def _default_out() -> str:
    return os.environ.get("MUXSIM_OUT", "out")


def _err(msg: str) -> None:
    print(f"muxsim: {msg}", file=sys.stderr)


def _apply_flags(sc: Scenario, args) -> Scenario:
    sim = sc.sim
    if getattr(args, "dt", None) is not None:
        sim = dataclasses.replace(sim, dt_s=args.dt)
    if getattr(args, "strict_slip", False):
        sim = dataclasses.replace(sim, strict_slip=True)
    if getattr(args, "allow_braking", False):
        sim = dataclasses.replace(sim, allow_motor_braking=True)
    sc.sim = sim
    if getattr(args, "auto_serialize", False):
        sc.auto_serialize = True
    return sc


def build_schedule(sc: Scenario) -> Schedule:
    units = sc.build_units()
    if sc.mode == "siso":
        return plan_siso(sc.goals, sc.motor, units, sc.latency)
    if sc.mode == "simo":
        return plan_simo(
            sc.goals, sc.motor, units, sc.budget, latency=sc.latency, loss=sc.loss,
            clutch=sc.clutch, strict=sc.sim.strict_slip, auto_serialize=sc.auto_serialize,
        )
    path = sc.resolve_schedule_path()
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        return parse_timeline(text)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def _validate(sc: Scenario, schedule: Schedule):
    return validate_schedule(
        schedule, sc.build_units(), sc.motor, sc.budget, sc.latency, sc.loss,
        goals=sc.goals if sc.mode != "replay" else (),
        allow_motor_braking=sc.sim.allow_motor_braking,
    )


def cmd_simulate(args) -> int:
    sc = _apply_flags(load_scenario(args.scenario), args)
    schedule = build_schedule(sc)
    report = _validate(sc, schedule)
    if not report.passed:
        _err(f"schedule rejected\n{report}")
        return EXIT_PHYSICS
    trace, energy = run(
        schedule, sc.build_units(), sc.motor, sc.sim, clutch=sc.clutch, loss=sc.loss,
        latency=sc.latency,
    )
    files = {
        "trace.csv": trace_csv(trace),
        "energy.txt": energy_text(energy),
        "events.csv": events_csv(trace),
        "schedule.tl": timeline_text(schedule),
    }
    written = write_outputs(args.out, files)
    print(f"makespan_s = {schedule.horizon_s:.6f}")
    print(f"input_energy_J = {energy.input_energy_J:.6f}")
    print(f"output_energy_J = {energy.output_energy_J:.6f}")
    print(f"efficiency = {energy.efficiency:.6f}")
    print("wrote " + ", ".join(str(p) for p in written))
    return EXIT_OK


def cmd_validate(args) -> int:
    sc = _apply_flags(load_scenario(args.scenario), args)
    if args.schedule:
        schedule = parse_timeline(Path(args.schedule).read_text())
    else:
        schedule = build_schedule(sc)
    report = _validate(sc, schedule)
    print(report)
    return EXIT_OK if report.passed else EXIT_PHYSICS


def cmd_fit(args) -> int:
    sc = load_scenario(args.scenario) if args.scenario else None
    if args.kind == "gap":
        data = read_torque_voltage_csv(args.data)
        p0 = sc.clutch if sc else ClutchParams()
        if args.initial_gap is not None:
            p0 = dataclasses.replace(p0, air_gap_m=args.initial_gap)
        fit = fit_air_gap(data, p0, fit_mu=args.fit_mu)
        frag = {"clutch": {"air_gap_m": fit.params.air_gap_m}}
        if args.fit_mu:
            frag["clutch"]["friction_coefficient"] = fit.params.friction_coefficient
        print(f"# rms residual {fit.rms_residual_Nm:.6g} N*m after {fit.iterations} iterations")
    else:
        points = read_efficiency_csv(args.data)
        screw = sc.leadscrew if sc else None
        loss = fit_loss_model(points, screw, negative=args.negative)
        if loss.coulomb_torque_Nm < 0:
            _err("warning: fitted coulomb offset is negative; loss torque is floored at zero")
        frag = {"loss": dataclasses.asdict(loss)}
    sys.stdout.write(tomli_w.dumps(frag))
    return EXIT_OK


def characterize(sc: Scenario) -> list[tuple[str, str]]:
    """Derived figures of merit as (label, formatted value) rows."""
    p = sc.clutch
    v = p.drive_voltage_V
    power, rpm = max_clutching_power(p)
    screw = sc.leadscrew
    locks = self_locks(screw)
    rows = [
        ("drive voltage", f"{v:.1f} V"),
        ("electrostatic pressure", f"{electrostatic_pressure(p, v):.6g} Pa"),
        ("friction coefficient", f"{p.friction_coefficient:.6f}"),
        ("capacity at drive voltage", f"{torque_capacity(p, v):.4f} N*m"),
        ("capacity at 0 V", f"{torque_capacity(p, 0.0):.4f} N*m"),
        ("max clutching power", f"{power:.4f} W at {rpm:.1f} rpm"),
        ("engagement time constant", f"{engagement_time_constant(p) * 1e3:.2f} ms"),
        ("lead angle", f"{math.degrees(screw.lead_angle_rad):.3f} deg"),
        ("thread friction angle", f"{math.degrees(screw.friction_angle_rad):.3f} deg"),
        ("self-lock verdict", "self-locking" if locks else "back-drivable"),
    ]
    for u in sc.units:
        F = u.load.mass_kg * u.load.gravity_m_s2 if u.load.kind == "hanging_mass" else u.load.tension_N
        on = switch_latency(sc.latency, F, "on")
        off = switch_latency(sc.latency, F, "off")
        tau = required_shaft_torque(screw, sc.loss, F)
        eff = transmission_efficiency(screw, sc.loss, F)
        rows.append((
            f"unit {u.id} ({F:.2f} N)",
            f"on {on * 1e3:.1f} ms, off {off * 1e3:.1f} ms, torque {tau:.4f} N*m, efficiency {eff:.4f}",
        ))
    return rows


def cmd_characterize(args) -> int:
    sc = load_scenario(args.scenario)
    rows = characterize(sc)
    width = max(len(k) for k, _ in rows)
    for k, val in rows:
        print(f"{k:<{width}}  {val}")
    if not self_locks(sc.leadscrew):
        _err("warning: leadscrew is back-drivable; loaded outputs cannot hold position unpowered")
    if args.out_given:
        volts = np.linspace(0.0, sc.clutch.voltage_ceiling_V, 101)
        torque = holding_torque_curve(sc.clutch, volts)
        csv_text = "voltage_V,torque_Nm\n" + "".join(f"{a:.3f},{b:.6f}\n" for a, b in zip(volts, torque))
        write_outputs(args.out, {"torque_voltage.csv": csv_text})
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="muxsim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output directory (default $MUXSIM_OUT or ./out)")
        p.add_argument("--dt", type=float, default=None, help="simulation step in seconds")
        p.add_argument("--strict-slip", action="store_true")
        p.add_argument("--allow-braking", action="store_true")
        p.add_argument("--auto-serialize", action="store_true")

    sim = sub.add_parser("simulate", help="plan and simulate a scenario")
    sim.add_argument("scenario")
    common(sim)
    sim.set_defaults(func=cmd_simulate)

    val = sub.add_parser("validate", help="plan (or load) a schedule and check it")
    val.add_argument("scenario")
    val.add_argument("--schedule", help="timeline file to check instead of planning")
    common(val)
    val.set_defaults(func=cmd_validate)

    fit = sub.add_parser("fit", help="fit air gap or loss model from CSV data")
    fit.add_argument("data")
    fit.add_argument("--kind", choices=("gap", "loss"), required=True)
    fit.add_argument("--scenario", help="take starting parameters from this scenario")
    fit.add_argument("--fit-mu", action="store_true", help="also fit the friction coefficient")
    fit.add_argument("--initial-gap", type=float, default=None, help="starting air gap in m")
    fit.add_argument("--negative", choices=("error", "clamp", "allow"), default="allow",
                     help="policy for a negative fitted loss coefficient")
    fit.set_defaults(func=cmd_fit)

    ch = sub.add_parser("characterize", help="derived figures for a scenario")
    ch.add_argument("scenario")
    common(ch)
    ch.set_defaults(func=cmd_characterize)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if hasattr(args, "out"):
        args.out_given = args.out is not None
        if args.out is None:
            args.out = _default_out()
    try:
        return args.func(args)
    except (ScenarioError, DataError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    except FitError as exc:
        _err(f"fit failed: {exc}")
        return EXIT_FIT
    except (PhysicsFault, PlanningError, BrakingPolicyError) as exc:
        _err(f"fault: {exc}")
        return EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())
