"""Clutch-pair logic table, switching latencies and the per-DoF state machine.

Each DoF unit owns two clutches: C1 couples the CW input shaft, C2 the CCW
shaft. The unit tracks one pending or active drive interval; direction
reversals pass through a full release of the old clutch before the new one
starts engaging, so no instant has both clutches rising.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .clutch import ClutchDriveState, ClutchParams, engagement_profile, release_profile
from .drivetrain import LeadscrewSpec, LoadSpec, load_tension

INF = math.inf
# Slack on travel limits so a goal placed exactly on a limit survives roundoff.
LIMIT_TOLERANCE_M = 1e-9


class Output(enum.Enum):
    HOLD = "Hold"
    CW = "CW"
    CCW = "CCW"
    BRAKE = "Brake"


class ClutchPairState(NamedTuple):
    c1: int
    c2: int

    def __str__(self):
        return f"{self.c1}{self.c2}"

    @classmethod
    def parse(cls, text: str) -> "ClutchPairState":
        text = text.strip().strip("()").replace(",", "").replace(" ", "")
        if len(text) != 2 or any(ch not in "01" for ch in text):
            raise ValueError(f"bad clutch-pair state {text!r}")
        return cls(int(text[0]), int(text[1]))


HOLD = ClutchPairState(0, 0)
CW = ClutchPairState(1, 0)
CCW = ClutchPairState(0, 1)
BRAKE = ClutchPairState(1, 1)

LOGIC_TABLE = {HOLD: Output.HOLD, CW: Output.CW, CCW: Output.CCW, BRAKE: Output.BRAKE}
DIRECTION = {Output.HOLD: 0, Output.CW: 1, Output.CCW: -1, Output.BRAKE: 0}


class BrakingPolicyError(ValueError):
    """(1,1) commanded while motor braking is disallowed."""


class PhysicsFault(RuntimeError):
    """Raised when a simulated or planned motion violates the hardware model."""


class LimitFault(PhysicsFault):
    def __init__(self, unit_id, position, limits, time=None):
        self.unit_id, self.position, self.limits, self.time = unit_id, position, limits, time
        where = "" if time is None else f" at t={time:.6f} s"
        super().__init__(
            f"unit {unit_id} slider at {position:.6f} m left travel limits {limits}{where}"
        )


def resolve_state(s: ClutchPairState, allow_motor_braking: bool = False) -> Output:
    if s not in LOGIC_TABLE:
        raise ValueError(f"clutch bits must be 0/1, got {s!r}")
    out = LOGIC_TABLE[ClutchPairState(*s)]
    if out is Output.BRAKE and not allow_motor_braking:
        raise BrakingPolicyError(
            "state (1,1) couples both shafts and stalls the motor; set allow_motor_braking"
        )
    return out


@dataclass(frozen=True)
class SwitchLatencyModel:
    """Load-indexed table of (load_N, on_latency_s, off_latency_s)."""

    points: tuple[tuple[float, float, float], ...] = (
        (2.4, 0.0979, 0.120),
        (22.24, 0.224, 0.424),
    )

    def __post_init__(self):
        pts = tuple(tuple(float(v) for v in row) for row in self.points)
        if not pts:
            raise ValueError("latency model needs at least one calibration point")
        loads = [row[0] for row in pts]
        if any(b <= a for a, b in zip(loads, loads[1:])):
            raise ValueError("latency calibration loads must be strictly increasing")
        if any(on <= 0 or off <= 0 for _, on, off in pts):
            raise ValueError("latencies must be > 0")
        object.__setattr__(self, "points", pts)


def switch_latency(m: SwitchLatencyModel, load_N: float, transition: str) -> float:
    """Interpolated switching time; clamped beyond the outermost points."""
    if load_N < 0:
        raise ValueError("load_N must be >= 0")
    col = {"on": 1, "off": 2}[transition]
    loads = [row[0] for row in m.points]
    values = [row[col] for row in m.points]
    return float(np.interp(load_N, loads, values))


@dataclass
class DofUnit:
    id: int
    screw: LeadscrewSpec = field(default_factory=LeadscrewSpec)
    load: LoadSpec = field(default_factory=LoadSpec)
    slider_position_m: float = 0.0
    travel_limits_m: tuple[float, float] = (0.0, 0.09)
    cw_clutch: ClutchDriveState = field(default_factory=ClutchDriveState)
    ccw_clutch: ClutchDriveState = field(default_factory=ClutchDriveState)
    commanded: ClutchPairState = HOLD
    # timeline of the current (or most recent) drive
    drive_dir: int = 0
    engage_at: float = INF
    drive_start: float = INF
    drive_end: float = INF
    release_start: float = -INF
    release_end: float = -INF
    release_dir: int = 0
    braking_since: float = INF

    def __post_init__(self):
        lo, hi = self.travel_limits_m
        if not lo < hi:
            raise ValueError(f"unit {self.id}: travel limits must satisfy min < max")
        if not lo - LIMIT_TOLERANCE_M <= self.slider_position_m <= hi + LIMIT_TOLERANCE_M:
            raise ValueError(f"unit {self.id}: initial position outside travel limits")
        self.travel_limits_m = (float(lo), float(hi))

    @property
    def tension_N(self) -> float:
        return load_tension(self.load)

    @property
    def output(self) -> Output:
        return LOGIC_TABLE[self.commanded]

    def is_driving(self, t: float) -> bool:
        return self.drive_start <= t < self.drive_end

    def is_braking(self, t: float) -> bool:
        return self.commanded == BRAKE and t >= self.braking_since


def _end_drive(u: DofUnit, t_now: float, latency: SwitchLatencyModel) -> dict:
    """Field updates that drop the driving clutch's voltage at ``t_now``."""
    if u.drive_dir == 0 or u.drive_end <= t_now:
        return {}
    if u.drive_start < t_now:
        upd = dict(drive_end=t_now)
    else:
        # never got to move: collapse the interval
        upd = dict(drive_start=t_now, drive_end=t_now)
    if u.engage_at <= t_now:
        upd.update(
            release_start=t_now,
            release_end=t_now + switch_latency(latency, u.tension_N, "off"),
            release_dir=u.drive_dir,
        )
    return upd


def command_unit(
    u: DofUnit,
    s: ClutchPairState,
    t_now: float,
    latency: SwitchLatencyModel | None = None,
    allow_motor_braking: bool = False,
) -> DofUnit:
    """Apply a clutch-pair command at ``t_now`` and return the updated unit.

    Motion in the new direction starts one on-latency after its clutch is
    energised. Dropping to Hold stops the slider at once (the self-locking
    screw holds as soon as drive torque falls away) while the clutch takes
    one off-latency to release fully.
    """
    latency = latency or SwitchLatencyModel()
    s = ClutchPairState(*s)
    out = resolve_state(s, allow_motor_braking)
    if s == u.commanded:
        return u
    upd = _end_drive(u, t_now, latency)
    if u.commanded == BRAKE:
        upd["braking_since"] = INF
        upd["release_start"] = t_now
        upd["release_end"] = t_now + switch_latency(latency, u.tension_N, "off")
        upd["release_dir"] = 0

    if out is Output.HOLD:
        return replace(u, commanded=s, **upd)

    if out is Output.BRAKE:
        upd.update(braking_since=t_now, drive_dir=0, engage_at=INF,
                   drive_start=INF, drive_end=INF)
        return replace(u, commanded=s, **upd)

    d = DIRECTION[out]
    release_end = upd.get("release_end", u.release_end)
    release_dir = upd.get("release_dir", u.release_dir)
    engage_at = t_now
    if release_end > t_now and release_dir != d:
        # sequence through Hold: the other clutch must finish releasing first
        engage_at = release_end
    on = switch_latency(latency, u.tension_N, "on")
    upd.update(drive_dir=d, engage_at=engage_at, drive_start=engage_at + on, drive_end=INF)
    return replace(u, commanded=s, **upd)


def clutch_states(
    u: DofUnit, t: float, clutch: ClutchParams, latency: SwitchLatencyModel | None = None
) -> tuple[ClutchDriveState, ClutchDriveState]:
    """Snapshot of (cw, ccw) clutch drive states at time ``t``."""
    latency = latency or SwitchLatencyModel()
    v_drive = clutch.drive_voltage_V
    states = {1: ClutchDriveState(), -1: ClutchDriveState()}

    if u.commanded == BRAKE and t >= u.braking_since:
        full = ClutchDriveState(v_drive, engagement_profile(clutch, t - u.braking_since))
        return full, full

    if u.release_start <= t < u.release_end:
        t_off = switch_latency(latency, u.tension_N, "off")
        frac = release_profile(clutch, t - u.release_start, 1.0, t_off)
        for d in ((1, -1) if u.release_dir == 0 else (u.release_dir,)):
            states[d] = ClutchDriveState(0.0, frac)

    d = u.drive_dir
    active = u.commanded not in (HOLD, BRAKE)
    if active and d != 0 and t >= u.engage_at:
        if t >= u.drive_start:
            frac = 1.0
        else:
            frac = engagement_profile(clutch, t - u.engage_at)
        states[d] = ClutchDriveState(v_drive, frac)
    return states[1], states[-1]


def advance(u: DofUnit, t0: float, t1: float, slider_speed: float, blocked: bool = False) -> float:
    """Move the slider over [t0, t1] and return the displacement.

    ``slider_speed`` is the unsigned speed for the current shaft rpm. A blocked
    (slipping) clutch leaves the self-locked slider where it is.
    """
    if blocked or u.drive_dir == 0 or t1 <= t0:
        return 0.0
    overlap = min(t1, u.drive_end) - max(t0, u.drive_start)
    if overlap <= 0:
        return 0.0
    dx = u.drive_dir * slider_speed * overlap
    new = u.slider_position_m + dx
    lo, hi = u.travel_limits_m
    if new < lo - LIMIT_TOLERANCE_M or new > hi + LIMIT_TOLERANCE_M:
        raise LimitFault(u.id, new, u.travel_limits_m, t1)
    u.slider_position_m = new
    return dx
