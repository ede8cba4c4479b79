"""Simulator for a single-motor electrostatic-clutch multiplexer."""

from .clutch import (
    BreakdownError, ClutchDriveState, ClutchParams, engagement_profile, max_clutching_power,
    release_profile, speed_derating, torque_capacity, transmitted_torque,
)
from .drivetrain import (
    FrictionLossModel, LeadscrewSpec, LoadSpec, MotorSpec, ShaftPair, required_shaft_torque,
    self_locks, slider_velocity, transmission_efficiency,
)
from .logic import (
    BRAKE, CCW, CW, HOLD, ClutchPairState, DofUnit, Output, SwitchLatencyModel, resolve_state,
    switch_latency,
)
from .scheduler import Goal, PowerBudget, Schedule, ScheduleEvent, plan_simo, plan_siso, validate_schedule
from .sim import EnergyReport, SimConfig, SimTrace, run
from .calibration import fit_air_gap, fit_loss_model, measured_loss_model
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"
