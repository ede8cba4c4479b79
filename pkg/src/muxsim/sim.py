"""Fixed-step quasi-static simulation of a schedule against DoF units.

Loads move at constant slider speed while a unit is driving; there is no
inertia. Schedule events are applied at their exact times inside a step and
slider motion is integrated over the exact overlap with each drive interval,
so final positions do not depend on the step size. Power and torque are
sampled on the step grid and integrated with the trapezoid rule.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from .clutch import ClutchParams, speed_derating, torque_capacity
from .drivetrain import FrictionLossModel, MotorSpec, required_shaft_torque, self_locks, slider_velocity
from .logic import (
    DofUnit, PhysicsFault, SwitchLatencyModel, advance, clutch_states, command_unit,
)
from .scheduler import Schedule


class SlipFault(PhysicsFault):
    pass


class MotorOverloadFault(PhysicsFault):
    pass


class BackDriveFault(PhysicsFault):
    pass


@dataclass(frozen=True)
class SimConfig:
    dt_s: float = 0.001
    end_s: float | None = None  # None: run to the schedule horizon
    strict_slip: bool = False
    seed: int = 0  # reserved; the simulation is deterministic
    idle_drag_torque_Nm: float = 0.0
    allow_motor_braking: bool = False

    def __post_init__(self):
        if not self.dt_s > 0:
            raise ValueError("dt_s must be > 0")
        if self.end_s is not None and self.end_s < 0:
            raise ValueError("end_s must be >= 0")
        if self.idle_drag_torque_Nm < 0:
            raise ValueError("idle_drag_torque_Nm must be >= 0")


@dataclass
class UnitTrace:
    position_m: np.ndarray
    state: list[str]
    torque_Nm: np.ndarray
    tension_N: np.ndarray


@dataclass
class SimTrace:
    time_s: np.ndarray
    shaft_rpm: np.ndarray
    total_torque_Nm: np.ndarray
    total_power_W: np.ndarray
    units: dict[int, UnitTrace]
    events: list[tuple[float, int, str, str]] = field(default_factory=list)

    def __len__(self):
        return len(self.time_s)

    def final_positions(self) -> dict[int, float]:
        return {uid: float(ut.position_m[-1]) for uid, ut in self.units.items()}


@dataclass(frozen=True)
class UnitEnergy:
    input_energy_J: float
    output_energy_J: float
    displacement_m: float
    efficiency: float


@dataclass(frozen=True)
class EnergyReport:
    input_energy_J: float
    output_energy_J: float
    efficiency: float
    per_unit: dict[int, UnitEnergy]

    def as_dict(self) -> dict[str, float]:
        out = {
            "input_energy_J": self.input_energy_J,
            "output_energy_J": self.output_energy_J,
            "efficiency": self.efficiency,
        }
        for uid, ue in sorted(self.per_unit.items()):
            out[f"unit{uid}.input_energy_J"] = ue.input_energy_J
            out[f"unit{uid}.output_energy_J"] = ue.output_energy_J
            out[f"unit{uid}.displacement_m"] = ue.displacement_m
            out[f"unit{uid}.efficiency"] = ue.efficiency
        return out


def _ratio(num: float, den: float) -> float:
    # zero input energy reports zero efficiency rather than NaN
    return num / den if den > 0 else 0.0


def energy_report(trace: SimTrace, units: Sequence[DofUnit] | None = None) -> EnergyReport:
    if len(trace) == 0:
        raise ValueError("empty trace")
    t = trace.time_s
    omega = trace.shaft_rpm * (2.0 * math.pi / 60.0)
    e_in = float(trapezoid(trace.total_power_W, t)) if len(t) > 1 else 0.0
    per_unit = {}
    e_out = 0.0
    for uid, ut in trace.units.items():
        u_in = float(trapezoid(ut.torque_Nm * omega, t)) if len(t) > 1 else 0.0
        dx = float(ut.position_m[-1] - ut.position_m[0])
        u_out = float(ut.tension_N[-1]) * dx
        e_out += u_out
        per_unit[uid] = UnitEnergy(u_in, u_out, dx, _ratio(u_out, u_in))
    return EnergyReport(e_in, e_out, _ratio(e_out, e_in), per_unit)


def run(
    schedule: Schedule,
    units: Sequence[DofUnit],
    motor: MotorSpec,
    cfg: SimConfig | None = None,
    clutch: ClutchParams | None = None,
    loss: FrictionLossModel | None = None,
    latency: SwitchLatencyModel | None = None,
) -> tuple[SimTrace, EnergyReport]:
    """Execute ``schedule`` and return the sampled trace and its energy report."""
    cfg = cfg or SimConfig()
    clutch = clutch or ClutchParams()
    latency = latency or SwitchLatencyModel()
    if loss is None:
        from .calibration import measured_loss_model

        loss = measured_loss_model()

    state = {u.id: copy.deepcopy(u) for u in units}
    if len(state) != len(units):
        raise ValueError("duplicate unit ids")
    for u in state.values():
        if u.tension_N > 0 and not self_locks(u.screw):
            raise BackDriveFault(
                f"unit {u.id}: leadscrew is back-drivable; a loaded slider cannot hold position"
            )
    for e in schedule.events:
        if e.unit_id not in state:
            raise ValueError(f"schedule references unknown unit {e.unit_id}")

    events = sorted(enumerate(schedule.events), key=lambda ie: (ie[1].time_s, ie[0]))
    events = [e for _, e in events]
    end = schedule.horizon_s if cfg.end_s is None else cfg.end_s
    n_steps = int(math.ceil(end / cfg.dt_s - 1e-9)) if end > 0 else 0

    capacity = torque_capacity(clutch, clutch.drive_voltage_V) * speed_derating(clutch, motor.speed_rpm)
    ids = list(state)
    demand = {}  # unit id -> (torque while driving, slipping)

    def refresh_demand(u: DofUnit):
        if u.drive_dir == 0:
            demand[u.id] = (0.0, False)
            return
        tau = required_shaft_torque(u.screw, loss, u.tension_N, lifting=u.drive_dir > 0)
        if tau > capacity * (1.0 + 1e-12):
            demand[u.id] = (capacity, True)
        else:
            demand[u.id] = (tau, False)

    for u in state.values():
        refresh_demand(u)

    def stalled(t: float) -> bool:
        return any(u.is_braking(t) for u in state.values())

    def integrate(t0: float, t1: float):
        if t1 <= t0:
            return
        rpm = 0.0 if stalled(t0) else motor.speed_rpm
        for u in state.values():
            speed = abs(slider_velocity(u.screw, rpm))
            advance(u, t0, t1, speed, blocked=demand[u.id][1])

    n_rows = n_steps + 1
    time = np.arange(n_rows, dtype=float) * cfg.dt_s
    rpm_col = np.empty(n_rows)
    tot_tau = np.empty(n_rows)
    pos = {uid: np.empty(n_rows) for uid in ids}
    tq = {uid: np.empty(n_rows) for uid in ids}
    ten = {uid: np.full(n_rows, state[uid].tension_N) for uid in ids}
    st = {uid: [] for uid in ids}
    log: list[tuple[float, int, str, str]] = []

    ei, cursor = 0, 0.0
    for k in range(n_rows):
        t = time[k]
        while ei < len(events) and events[ei].time_s <= t:
            e = events[ei]
            integrate(cursor, e.time_s)
            cursor = max(cursor, e.time_s)
            old = state[e.unit_id]
            new = command_unit(old, e.state, e.time_s, latency, cfg.allow_motor_braking)
            if new is not old:
                log.append((e.time_s, e.unit_id, str(old.commanded), str(new.commanded)))
                state[e.unit_id] = new
                refresh_demand(new)
            ei += 1
        integrate(cursor, t)
        cursor = t

        rpm = 0.0 if stalled(t) else motor.speed_rpm
        total = 0.0
        for uid in ids:
            u = state[uid]
            tau = 0.0
            if rpm > 0 and u.is_driving(t):
                tau, slipping = demand[uid]
                if slipping and cfg.strict_slip:
                    raise SlipFault(
                        f"unit {uid}: demanded torque exceeds clutch capacity {capacity:.4f} N*m at t={t:.6f} s"
                    )
            total += tau
            pos[uid][k] = u.slider_position_m
            tq[uid][k] = tau
            st[uid].append(str(u.commanded))
        if rpm > 0:
            total += cfg.idle_drag_torque_Nm
        if total > motor.max_torque_Nm * (1.0 + 1e-12):
            raise MotorOverloadFault(
                f"motor torque demand {total:.4f} N*m exceeds {motor.max_torque_Nm} N*m at t={t:.6f} s"
            )
        rpm_col[k] = rpm
        tot_tau[k] = total

    for u in state.values():
        u.cw_clutch, u.ccw_clutch = clutch_states(u, cursor, clutch, latency)

    trace = SimTrace(
        time_s=time,
        shaft_rpm=rpm_col,
        total_torque_Nm=tot_tau,
        total_power_W=tot_tau * rpm_col * (2.0 * math.pi / 60.0),
        units={uid: UnitTrace(pos[uid], st[uid], tq[uid], ten[uid]) for uid in ids},
        events=log,
    )
    return trace, energy_report(trace)
