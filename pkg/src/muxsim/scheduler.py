"""Compile position goals into clutch-state timelines and check them.

SISO plans run goals back to back in input order, one active unit at a
time. SIMO plans start every goal at t = 0 and drop each unit to Hold once
its target is reached, within the motor power budget.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .clutch import ClutchParams, speed_derating, torque_capacity
from .drivetrain import FrictionLossModel, MotorSpec, required_shaft_torque, slider_velocity
from .logic import (
    BRAKE, CCW, CW, DIRECTION, HOLD, LIMIT_TOLERANCE_M, LOGIC_TABLE,
    ClutchPairState, DofUnit, SwitchLatencyModel, switch_latency,
)

MODES = ("siso", "simo")


class PlanningError(ValueError):
    pass


class BudgetError(PlanningError):
    def __init__(self, message, interval=None, demand_W=None, budget_W=None):
        super().__init__(message)
        self.interval, self.demand_W, self.budget_W = interval, demand_W, budget_W


class SlipError(PlanningError):
    pass


class SlipWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Goal:
    unit_id: int
    target_position_m: float
    deadline_s: float | None = None


@dataclass(frozen=True)
class ScheduleEvent:
    time_s: float
    unit_id: int
    state: ClutchPairState


@dataclass
class Schedule:
    events: list[ScheduleEvent] = field(default_factory=list)
    mode: str = "siso"
    horizon_s: float = 0.0

    def for_unit(self, unit_id: int) -> list[ScheduleEvent]:
        return [e for e in self.events if e.unit_id == unit_id]

    def __len__(self):
        return len(self.events)


@dataclass(frozen=True)
class PowerBudget:
    motor_max_power_W: float = 5.0
    per_clutch_max_power_W: float = 2.70

    def __post_init__(self):
        if not (self.motor_max_power_W > 0 and self.per_clutch_max_power_W > 0):
            raise ValueError("power budget entries must be > 0")


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str
    unit_id: int | None = None
    time_s: float | None = None


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __str__(self):
        if self.passed:
            return "PASS"
        lines = [f"FAIL ({len(self.violations)} violations)"]
        for v in self.violations:
            where = "" if v.unit_id is None else f" unit {v.unit_id}"
            when = "" if v.time_s is None else f" t={v.time_s:.6f}"
            lines.append(f"  {v.kind}{where}{when}: {v.detail}")
        return "\n".join(lines)


def _default_loss() -> FrictionLossModel:
    from .calibration import measured_loss_model

    return measured_loss_model()


def _units_by_id(units: Iterable[DofUnit]) -> dict[int, DofUnit]:
    table = {}
    for u in units:
        if u.id in table:
            raise PlanningError(f"unit id {u.id} defined twice")
        table[u.id] = u
    return table


def _check_goals(goals: Sequence[Goal], table: dict[int, DofUnit]) -> None:
    seen = set()
    for g in goals:
        if g.unit_id not in table:
            raise PlanningError(f"goal references unknown unit {g.unit_id}")
        if g.unit_id in seen:
            raise PlanningError(f"unit {g.unit_id} has more than one goal")
        seen.add(g.unit_id)
        lo, hi = table[g.unit_id].travel_limits_m
        if not lo - LIMIT_TOLERANCE_M <= g.target_position_m <= hi + LIMIT_TOLERANCE_M:
            raise PlanningError(
                f"unit {g.unit_id}: target {g.target_position_m} m outside limits {(lo, hi)}"
            )


@dataclass(frozen=True)
class _Move:
    unit_id: int
    state: ClutchPairState
    on_s: float
    travel_s: float
    off_s: float
    tension_N: float

    @property
    def makespan(self) -> float:
        return self.on_s + self.travel_s + self.off_s


def _move_for(g: Goal, u: DofUnit, motor: MotorSpec, latency: SwitchLatencyModel) -> _Move:
    dx = g.target_position_m - u.slider_position_m
    F = u.tension_N
    if dx == 0:
        return _Move(u.id, HOLD, 0.0, 0.0, 0.0, F)
    speed = abs(slider_velocity(u.screw, motor.speed_rpm))
    if speed == 0:
        raise PlanningError(f"unit {u.id}: zero slider speed, target unreachable")
    return _Move(
        u.id, CW if dx > 0 else CCW,
        switch_latency(latency, F, "on"), abs(dx) / speed, switch_latency(latency, F, "off"), F,
    )


def plan_siso(
    goals: Sequence[Goal],
    motor: MotorSpec,
    units: Sequence[DofUnit],
    latency: SwitchLatencyModel | None = None,
) -> Schedule:
    latency = latency or SwitchLatencyModel()
    table = _units_by_id(units)
    _check_goals(goals, table)
    events: list[ScheduleEvent] = []
    t = 0.0
    for g in goals:
        m = _move_for(g, table[g.unit_id], motor, latency)
        if m.state == HOLD:
            events.append(ScheduleEvent(t, g.unit_id, HOLD))
            continue
        events.append(ScheduleEvent(t, g.unit_id, m.state))
        events.append(ScheduleEvent(t + m.on_s + m.travel_s, g.unit_id, HOLD))
        t += m.makespan
    return Schedule(events, "siso", t)


def _phase_events(moves: Sequence[_Move], t0: float) -> tuple[list[ScheduleEvent], float]:
    events, hold_events = [], []
    end = t0
    for m in moves:
        events.append(ScheduleEvent(t0, m.unit_id, m.state))
        if m.state != HOLD:
            hold_events.append(ScheduleEvent(t0 + m.on_s + m.travel_s, m.unit_id, HOLD))
            end = max(end, t0 + m.makespan)
    hold_events.sort(key=lambda e: e.time_s)
    return events + hold_events, end


def plan_simo(
    goals: Sequence[Goal],
    motor: MotorSpec,
    units: Sequence[DofUnit],
    budget: PowerBudget | None = None,
    latency: SwitchLatencyModel | None = None,
    loss: FrictionLossModel | None = None,
    clutch: ClutchParams | None = None,
    strict: bool = False,
    auto_serialize: bool = False,
) -> Schedule:
    budget = budget or PowerBudget()
    latency = latency or SwitchLatencyModel()
    loss = loss or _default_loss()
    clutch = clutch or ClutchParams()
    table = _units_by_id(units)
    _check_goals(goals, table)

    moves = [_move_for(g, table[g.unit_id], motor, latency) for g in goals]
    power = {}
    for m in moves:
        u = table[m.unit_id]
        tau = 0.0
        if m.state != HOLD:
            tau = required_shaft_torque(u.screw, loss, m.tension_N, lifting=m.state == CW)
            available = torque_capacity(clutch, clutch.drive_voltage_V)
            available *= speed_derating(clutch, motor.speed_rpm)
            p_clutch = tau * motor.angular_speed
            if tau > available or p_clutch > budget.per_clutch_max_power_W:
                msg = (f"unit {u.id}: clutch demand {tau:.4f} N*m / {p_clutch:.3f} W exceeds "
                       f"capacity {available:.4f} N*m / {budget.per_clutch_max_power_W:.3f} W")
                if strict:
                    raise SlipError(msg)
                warnings.warn(msg, SlipWarning, stacklevel=2)
        power[m.unit_id] = tau * motor.angular_speed

    phases: list[list[_Move]] = []
    pending = list(moves)
    while pending:
        phase = list(pending)
        deferred: list[_Move] = []
        while True:
            peak, interval = _peak_power(phase, power)
            if peak <= budget.motor_max_power_W * (1 + 1e-12):
                break
            if not auto_serialize or len([m for m in phase if m.state != HOLD]) <= 1:
                raise BudgetError(
                    f"aggregate input power {peak:.4f} W exceeds motor budget "
                    f"{budget.motor_max_power_W:.4f} W during [{interval[0]:.4f}, {interval[1]:.4f}] s",
                    interval, peak, budget.motor_max_power_W,
                )
            # defer the heaviest remaining load (latest in input order on ties)
            moving = [m for m in phase if m.state != HOLD]
            victim = max(reversed(moving), key=lambda m: m.tension_N)
            phase.remove(victim)
            deferred.insert(0, victim)
        phases.append(phase)
        pending = deferred

    events: list[ScheduleEvent] = []
    t = 0.0
    for phase in phases:
        ev, t = _phase_events(phase, t)
        events.extend(ev)
    return Schedule(events, "simo", t)


def _peak_power(moves: Sequence[_Move], power: dict[int, float]) -> tuple[float, tuple[float, float]]:
    intervals = [(m.on_s, m.on_s + m.travel_s, power[m.unit_id]) for m in moves if m.state != HOLD]
    best, where = 0.0, (0.0, 0.0)
    for t0, t1, p in power_profile(intervals):
        if p > best:
            best, where = p, (t0, t1)
    return best, where


def power_profile(intervals: Iterable[tuple[float, float, float]]) -> list[tuple[float, float, float]]:
    """Sum overlapping (start, end, power) intervals into disjoint pieces."""
    intervals = [iv for iv in intervals if iv[1] > iv[0]]
    cuts = sorted({t for iv in intervals for t in iv[:2]})
    pieces = []
    for a, b in zip(cuts, cuts[1:]):
        mid = 0.5 * (a + b)
        p = sum(pw for s, e, pw in intervals if s <= mid < e)
        pieces.append((a, b, p))
    return pieces


def motion_intervals(
    events: Sequence[ScheduleEvent],
    tension_N: float,
    latency: SwitchLatencyModel,
    horizon_s: float = math.inf,
) -> list[tuple[float, float, int]]:
    """Replay one unit's commands into (start, end, direction) motion intervals."""
    on = switch_latency(latency, tension_N, "on")
    off = switch_latency(latency, tension_N, "off")
    state = HOLD
    drive = None  # (direction, engaged_at, motion_start)
    rel_end, rel_dir = -math.inf, 0
    out = []
    for e in sorted(events, key=lambda e: e.time_s):
        t, s = e.time_s, ClutchPairState(*e.state)
        if s == state:
            continue
        if drive is not None:
            d, engaged_at, start = drive
            if engaged_at <= t:
                rel_end, rel_dir = t + off, d
            if start < t:
                out.append((start, t, d))
            drive = None
        if state == BRAKE:
            rel_end, rel_dir = t + off, 0
        state = s
        d = DIRECTION[LOGIC_TABLE[s]]
        if d:
            engaged_at = rel_end if (rel_end > t and rel_dir != d) else t
            drive = (d, engaged_at, engaged_at + on)
    if drive is not None and drive[2] < horizon_s:
        out.append((drive[2], horizon_s, drive[0]))
    return out


def validate_schedule(
    s: Schedule,
    units: Sequence[DofUnit],
    motor: MotorSpec,
    budget: PowerBudget | None = None,
    latency: SwitchLatencyModel | None = None,
    loss: FrictionLossModel | None = None,
    goals: Sequence[Goal] = (),
    allow_motor_braking: bool = False,
) -> ValidationReport:
    """Check a schedule; violations are returned as data, never raised."""
    budget = budget or PowerBudget()
    latency = latency or SwitchLatencyModel()
    loss = loss or _default_loss()
    report = ValidationReport()
    add = report.violations.append
    try:
        table = _units_by_id(units)
    except PlanningError as exc:
        add(Violation("units", str(exc)))
        return report

    if s.mode not in MODES:
        add(Violation("mode", f"unknown mode {s.mode!r}"))
    times = [e.time_s for e in s.events]
    for i, (a, b) in enumerate(zip(times, times[1:])):
        if b < a:
            add(Violation("ordering", f"event {i + 1} at {b} precedes event {i} at {a}", time_s=b))
    if times and (times[0] < 0 or times[-1] > s.horizon_s + 1e-12):
        add(Violation("horizon", f"events span [{times[0]}, {times[-1]}] beyond horizon {s.horizon_s}"))

    for e in s.events:
        if e.unit_id not in table:
            add(Violation("unknown-unit", "event references undefined unit", e.unit_id, e.time_s))
        elif ClutchPairState(*e.state) == BRAKE and not allow_motor_braking:
            add(Violation("forbidden-state", "(1,1) motor braking not allowed", e.unit_id, e.time_s))

    horizon = max([s.horizon_s] + times)
    windows: dict[int, list[tuple[float, float]]] = {}
    intervals = []
    for uid, u in table.items():
        evs = sorted(s.for_unit(uid), key=lambda e: e.time_s)
        # non-Hold windows in schedule terms
        t_open = None
        for e in evs:
            busy = ClutchPairState(*e.state) != HOLD
            if busy and t_open is None:
                t_open = e.time_s
            elif not busy and t_open is not None:
                windows.setdefault(uid, []).append((t_open, e.time_s))
                t_open = None
        if t_open is not None:
            windows.setdefault(uid, []).append((t_open, horizon))
            add(Violation("final-state", "unit does not end in Hold", uid, evs[-1].time_s))

        x = u.slider_position_m
        lo, hi = u.travel_limits_m
        speed = abs(slider_velocity(u.screw, motor.speed_rpm))
        F = u.tension_N
        for start, end, d in motion_intervals(evs, F, latency, horizon):
            x += d * speed * (end - start)
            if not lo - LIMIT_TOLERANCE_M <= x <= hi + LIMIT_TOLERANCE_M:
                add(Violation("travel-limit", f"position {x:.6f} m outside {(lo, hi)}", uid, end))
                break
            tau = required_shaft_torque(u.screw, loss, F, lifting=d > 0)
            intervals.append((start, end, tau * motor.angular_speed, tau, uid))
            if tau * motor.angular_speed > budget.per_clutch_max_power_W * (1 + 1e-12):
                add(Violation("clutch-power", f"{tau * motor.angular_speed:.4f} W per clutch", uid, start))
        for g in goals:
            if g.unit_id == uid:
                if abs(x - g.target_position_m) > LIMIT_TOLERANCE_M:
                    add(Violation("goal", f"ends at {x:.6f} m, target {g.target_position_m:.6f} m", uid))
                if g.deadline_s is not None:
                    done = max([end for _, end, _ in motion_intervals(evs, F, latency, horizon)], default=0.0)
                    if done > g.deadline_s + 1e-12:
                        add(Violation("deadline", f"reached at {done:.4f} s > {g.deadline_s} s", uid, done))

    if s.mode == "siso":
        flat = sorted((a, b, uid) for uid, ws in windows.items() for a, b in ws)
        for (a0, b0, u0), (a1, b1, u1) in zip(flat, flat[1:]):
            if a1 < b0 and u0 != u1:
                add(Violation("siso-exclusivity", f"units {u0} and {u1} both active", u1, a1))

    for t0, t1, p in power_profile((a, b, p) for a, b, p, _, _ in intervals):
        if p > budget.motor_max_power_W * (1 + 1e-12):
            add(Violation("budget", f"{p:.4f} W > {budget.motor_max_power_W:.4f} W over [{t0:.4f}, {t1:.4f}]", time_s=t0))
    for t0, t1, tau in power_profile((a, b, tq) for a, b, _, tq, _ in intervals):
        if tau > motor.max_torque_Nm * (1 + 1e-12):
            add(Violation("motor-torque", f"{tau:.4f} N*m > {motor.max_torque_Nm} N*m", time_s=t0))
    return report
