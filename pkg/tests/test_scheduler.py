import pytest

from muxsim.drivetrain import LeadscrewSpec, LoadSpec, MotorSpec
from muxsim.logic import BRAKE, CW, HOLD, DofUnit, SwitchLatencyModel, switch_latency
from muxsim.scheduler import (
    BudgetError, Goal, PlanningError, PowerBudget, Schedule, ScheduleEvent, SlipError, SlipWarning,
    motion_intervals, plan_simo, plan_siso, power_profile, validate_schedule,
)

MOTOR = MotorSpec()
LAT = SwitchLatencyModel()
V = 18 / 60 * 0.014


def units(n=4, mass=2.27):
    return [DofUnit(i, LeadscrewSpec(), LoadSpec(mass_kg=mass)) for i in range(1, n + 1)]


def goals(*targets):
    return [Goal(i, x) for i, x in enumerate(targets, 1)]


def test_siso_slots_are_sequential():
    us = units()
    s = plan_siso(goals(0.04, 0.04, 0.04, 0.04), MOTOR, us, LAT)
    F = us[0].tension_N
    slot = switch_latency(LAT, F, "on") + 0.04 / V + switch_latency(LAT, F, "off")
    assert s.horizon_s == pytest.approx(4 * slot)
    starts = [e.time_s for e in s.events if e.state == CW]
    assert starts == pytest.approx([k * slot for k in range(4)])
    assert validate_schedule(s, us, MOTOR, goals=goals(0.04, 0.04, 0.04, 0.04)).passed


def test_simo_starts_together_and_beats_siso():
    us = units()
    g = goals(0.02, 0.03, 0.03, 0.05)
    simo = plan_simo(g, MOTOR, us)
    siso = plan_siso(g, MOTOR, us)
    assert {e.time_s for e in simo.events if e.state == CW} == {0.0}
    assert simo.horizon_s < siso.horizon_s
    assert validate_schedule(simo, us, MOTOR, goals=g).passed


def test_simo_budget_error_and_auto_serialize():
    us = units()
    g = goals(0.02, 0.03, 0.03, 0.05)
    tight = PowerBudget(motor_max_power_W=1.5)
    with pytest.raises(BudgetError) as exc:
        plan_simo(g, MOTOR, us, tight)
    assert exc.value.demand_W > 1.5
    s = plan_simo(g, MOTOR, us, tight, auto_serialize=True)
    report = validate_schedule(s, us, MOTOR, tight, goals=g)
    assert report.passed, str(report)
    assert s.horizon_s > plan_simo(g, MOTOR, us).horizon_s


def test_simo_slip_warning_and_strict():
    heavy = [DofUnit(1, LeadscrewSpec(), LoadSpec("constant_tension", tension_N=40.0))]
    with pytest.warns(SlipWarning):
        plan_simo([Goal(1, 0.01)], MOTOR, heavy)
    with pytest.raises(SlipError):
        plan_simo([Goal(1, 0.01)], MOTOR, heavy, strict=True)


def test_planning_errors():
    us = units(2)
    with pytest.raises(PlanningError):
        plan_siso([Goal(9, 0.01)], MOTOR, us)
    with pytest.raises(PlanningError):
        plan_siso([Goal(1, 0.2)], MOTOR, us)
    with pytest.raises(PlanningError):
        plan_siso([Goal(1, 0.01), Goal(1, 0.02)], MOTOR, us)
    with pytest.raises(PlanningError):
        plan_siso([Goal(1, 0.01)], MotorSpec(speed_rpm=0.0), us)


def test_zero_move_goal():
    s = plan_siso([Goal(1, 0.0)], MOTOR, units(1))
    assert s.horizon_s == 0.0 and all(e.state == HOLD for e in s.events)


def test_validation_catches_violations():
    us = units(2)
    bad = Schedule([
        ScheduleEvent(0.0, 1, CW), ScheduleEvent(0.5, 2, CW), ScheduleEvent(30.0, 1, HOLD),
        ScheduleEvent(31.0, 2, BRAKE), ScheduleEvent(32.0, 3, HOLD),
    ], "siso", 32.0)
    kinds = validate_schedule(bad, us, MOTOR).kinds()
    assert {"travel-limit", "siso-exclusivity", "forbidden-state", "unknown-unit", "final-state"} <= kinds
    unordered = Schedule([ScheduleEvent(2.0, 1, CW), ScheduleEvent(1.0, 1, HOLD)], "siso", 3.0)
    assert "ordering" in validate_schedule(unordered, us, MOTOR).kinds()


def test_validation_goal_and_deadline():
    us = units(1)
    s = plan_siso([Goal(1, 0.04)], MOTOR, us)
    assert "goal" in validate_schedule(s, us, MOTOR, goals=[Goal(1, 0.05)]).kinds()
    assert "deadline" in validate_schedule(s, us, MOTOR, goals=[Goal(1, 0.04, deadline_s=5.0)]).kinds()


def test_validation_budget():
    us = units()
    g = goals(0.02, 0.03, 0.03, 0.05)
    s = plan_simo(g, MOTOR, us)
    assert "budget" in validate_schedule(s, us, MOTOR, PowerBudget(motor_max_power_W=2.0)).kinds()


def test_power_profile_sums_overlaps():
    pieces = power_profile([(0, 2, 1.0), (1, 3, 2.0)])
    assert pieces == [(0, 1, 1.0), (1, 2, 3.0), (2, 3, 2.0)]


def test_motion_intervals_replay():
    F = 22.27
    on = switch_latency(LAT, F, "on")
    ev = [ScheduleEvent(0.0, 1, CW), ScheduleEvent(5.0, 1, HOLD)]
    assert motion_intervals(ev, F, LAT) == [(on, 5.0, 1)]
    # Hold before the clutch finishes engaging: no motion at all
    ev = [ScheduleEvent(0.0, 1, CW), ScheduleEvent(on / 2, 1, HOLD)]
    assert motion_intervals(ev, F, LAT) == []
