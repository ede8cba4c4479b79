"""Scenario files: TOML text describing hardware, loads, goals and run options.

Layout (every table optional except ``[[units]]``)::

    name = "siso demo"
    mode = "siso"              # siso | simo | replay
    schedule = "plan.tl"       # replay only, relative to the scenario file
    auto_serialize = false

    [clutch]     # ClutchParams fields
    [motor]      # speed_rpm, max_torque_Nm
    [leadscrew]  # LeadscrewSpec fields
    [loss]       # coulomb_torque_Nm, load_coefficient_Nm_per_N
    [latency]    # points = [[load_N, on_s, off_s], ...]
    [budget]     # motor_max_power_W, per_clutch_max_power_W
    [sim]        # dt_s, end_s, strict_slip, seed, idle_drag_torque_Nm, allow_motor_braking

    [[units]]
    id = 1
    mass_kg = 2.27             # or tension_N = 22.0
    travel_limits_m = [0.0, 0.09]
    initial_position_m = 0.0

    [[goals]]
    unit_id = 1
    target_position_m = 0.04
    deadline_s = 12.0          # optional

Omitting ``[loss]`` selects the model fitted to the measured single-unit
efficiencies; omitting ``clutch.friction_coefficient`` selects the value
calibrated to 0.43 N*m at 900 V.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib as tomli
except ModuleNotFoundError:  # Python < 3.11
    import tomli
import tomli_w

from .calibration import measured_loss_model
from .clutch import ClutchParams
from .drivetrain import FrictionLossModel, LeadscrewSpec, LoadSpec, MotorSpec
from .logic import DofUnit, SwitchLatencyModel
from .scheduler import Goal, PowerBudget
from .sim import SimConfig

SCENARIO_MODES = ("siso", "simo", "replay")
BUNDLED_DIR = Path(__file__).parent / "scenarios"


class ScenarioError(ValueError):
    """Schema violation; the message names the offending line or field."""


@dataclass(frozen=True)
class UnitConfig:
    id: int
    load: LoadSpec = field(default_factory=LoadSpec)
    travel_limits_m: tuple[float, float] = (0.0, 0.09)
    initial_position_m: float = 0.0


@dataclass
class Scenario:
    units: list[UnitConfig]
    goals: list[Goal] = field(default_factory=list)
    mode: str = "siso"
    name: str = ""
    clutch: ClutchParams = field(default_factory=ClutchParams)
    motor: MotorSpec = field(default_factory=MotorSpec)
    leadscrew: LeadscrewSpec = field(default_factory=LeadscrewSpec)
    loss: FrictionLossModel | None = None
    latency: SwitchLatencyModel = field(default_factory=SwitchLatencyModel)
    budget: PowerBudget = field(default_factory=PowerBudget)
    sim: SimConfig = field(default_factory=SimConfig)
    schedule_path: str | None = None
    auto_serialize: bool = False
    source: Path | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.loss is None:
            self.loss = measured_loss_model(self.leadscrew)
        if self.mode not in SCENARIO_MODES:
            raise ScenarioError(f"mode: must be one of {SCENARIO_MODES}, got {self.mode!r}")
        ids = [u.id for u in self.units]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise ScenarioError(f"units: id(s) {dupes} defined more than once")
        for i, g in enumerate(self.goals):
            if g.unit_id not in ids:
                raise ScenarioError(f"goals[{i}].unit_id: unit {g.unit_id} is not defined")
        if self.mode == "replay" and not self.schedule_path:
            raise ScenarioError("schedule: replay mode needs a schedule file")

    def build_units(self) -> list[DofUnit]:
        return [
            DofUnit(
                id=u.id, screw=self.leadscrew, load=u.load,
                slider_position_m=u.initial_position_m, travel_limits_m=u.travel_limits_m,
            )
            for u in self.units
        ]

    def resolve_schedule_path(self) -> Path | None:
        if self.schedule_path is None:
            return None
        p = Path(self.schedule_path)
        if not p.is_absolute() and self.source is not None:
            p = self.source.parent / p
        return p


def _coerce(where: str, cls, table: Any, renames: dict[str, str] | None = None, **extra):
    if not isinstance(table, dict):
        raise ScenarioError(f"{where}: expected a table")
    names = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = dict(extra)
    for key, value in table.items():
        name = (renames or {}).get(key, key)
        if name not in names or name in extra:
            raise ScenarioError(f"{where}.{key}: unknown field")
        default = names[name].default
        if isinstance(default, bool) and not isinstance(value, bool):
            raise ScenarioError(f"{where}.{key}: expected true/false")
        if isinstance(default, (int, float)) and not isinstance(default, bool):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ScenarioError(f"{where}.{key}: expected a number, got {value!r}")
            value = float(value) if isinstance(default, float) else value
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _number(where: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _unit(where: str, t: Any) -> UnitConfig:
    if not isinstance(t, dict):
        raise ScenarioError(f"{where}: expected a table")
    t = dict(t)
    allowed = {"id", "mass_kg", "tension_N", "gravity_m_s2", "travel_limits_m", "initial_position_m"}
    for key in t:
        if key not in allowed:
            raise ScenarioError(f"{where}.{key}: unknown field")
    if "id" not in t or not isinstance(t["id"], int) or isinstance(t["id"], bool):
        raise ScenarioError(f"{where}.id: integer id required")
    if "mass_kg" in t and "tension_N" in t:
        raise ScenarioError(f"{where}: give mass_kg or tension_N, not both")
    gravity = _number(f"{where}.gravity_m_s2", t.get("gravity_m_s2", 9.81))
    if "tension_N" in t:
        tension = _number(f"{where}.tension_N", t["tension_N"])
        if tension < 0:
            raise ScenarioError(f"{where}.tension_N: must be >= 0")
        load = LoadSpec("constant_tension", tension_N=tension, gravity_m_s2=gravity)
    else:
        mass = _number(f"{where}.mass_kg", t.get("mass_kg", 0.0))
        if mass < 0:
            raise ScenarioError(f"{where}.mass_kg: must be >= 0")
        load = LoadSpec("hanging_mass", mass_kg=mass, gravity_m_s2=gravity)
    limits = t.get("travel_limits_m", [0.0, 0.09])
    if not isinstance(limits, list) or len(limits) != 2:
        raise ScenarioError(f"{where}.travel_limits_m: expected [min, max]")
    lo, hi = (_number(f"{where}.travel_limits_m", x) for x in limits)
    if not lo < hi:
        raise ScenarioError(f"{where}.travel_limits_m: min must be < max")
    x0 = _number(f"{where}.initial_position_m", t.get("initial_position_m", 0.0))
    if not lo <= x0 <= hi:
        raise ScenarioError(f"{where}.initial_position_m: outside travel limits")
    return UnitConfig(t["id"], load, (lo, hi), x0)


def _goal(where: str, t: Any) -> Goal:
    if not isinstance(t, dict):
        raise ScenarioError(f"{where}: expected a table")
    for key in t:
        if key not in ("unit_id", "target_position_m", "deadline_s"):
            raise ScenarioError(f"{where}.{key}: unknown field")
    if not isinstance(t.get("unit_id"), int) or isinstance(t.get("unit_id"), bool):
        raise ScenarioError(f"{where}.unit_id: integer unit id required")
    if "target_position_m" not in t:
        raise ScenarioError(f"{where}.target_position_m: required")
    deadline = t.get("deadline_s")
    return Goal(
        t["unit_id"],
        _number(f"{where}.target_position_m", t["target_position_m"]),
        None if deadline is None else _number(f"{where}.deadline_s", deadline),
    )


TOP_LEVEL = {"name", "mode", "schedule", "auto_serialize", "clutch", "motor", "leadscrew",
             "loss", "latency", "budget", "sim", "units", "goals"}


def scenario_from_dict(doc: dict[str, Any], source: Path | None = None) -> Scenario:
    for key in doc:
        if key not in TOP_LEVEL:
            raise ScenarioError(f"{key}: unknown top-level field")
    units_raw = doc.get("units")
    if not isinstance(units_raw, list) or not units_raw:
        raise ScenarioError("units: at least one [[units]] table is required")
    goals_raw = doc.get("goals", [])
    if not isinstance(goals_raw, list):
        raise ScenarioError("goals: expected an array of tables")

    latency = SwitchLatencyModel()
    if "latency" in doc:
        lt = doc["latency"]
        if not isinstance(lt, dict) or set(lt) - {"points"}:
            raise ScenarioError("latency: only 'points' is allowed")
        pts = lt.get("points")
        if not isinstance(pts, list) or not all(isinstance(r, list) and len(r) == 3 for r in pts):
            raise ScenarioError("latency.points: expected [[load_N, on_s, off_s], ...]")
        try:
            latency = SwitchLatencyModel(
                tuple(tuple(_number("latency.points", x) for x in row) for row in pts)
            )
        except ValueError as exc:
            raise ScenarioError(f"latency.points: {exc}") from None

    leadscrew = _coerce("leadscrew", LeadscrewSpec, doc.get("leadscrew", {}))
    loss = None
    if "loss" in doc:
        loss = _coerce("loss", FrictionLossModel, doc["loss"])
    sim_table = dict(doc.get("sim", {})) if isinstance(doc.get("sim", {}), dict) else doc["sim"]
    if isinstance(sim_table, dict) and "end_s" in sim_table:
        sim_table["end_s"] = _number("sim.end_s", sim_table["end_s"])
    mode = doc.get("mode", "siso")
    if not isinstance(mode, str):
        raise ScenarioError("mode: expected a string")
    auto = doc.get("auto_serialize", False)
    if not isinstance(auto, bool):
        raise ScenarioError("auto_serialize: expected true/false")
    schedule = doc.get("schedule")
    if schedule is not None and not isinstance(schedule, str):
        raise ScenarioError("schedule: expected a file path string")
    clutch_table = doc.get("clutch", {})

    return Scenario(
        units=[_unit(f"units[{i}]", t) for i, t in enumerate(units_raw)],
        goals=[_goal(f"goals[{i}]", t) for i, t in enumerate(goals_raw)],
        mode=mode,
        name=str(doc.get("name", "")),
        clutch=_coerce("clutch", ClutchParams, clutch_table),
        motor=_coerce("motor", MotorSpec, doc.get("motor", {})),
        leadscrew=leadscrew,
        loss=loss,
        latency=latency,
        budget=_coerce("budget", PowerBudget, doc.get("budget", {})),
        sim=_coerce("sim", SimConfig, sim_table),
        schedule_path=schedule,
        auto_serialize=auto,
        source=source,
    )


def parse_scenario(text: str, source: Path | None = None) -> Scenario:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ScenarioError(f"syntax error: {exc}") from None
    return scenario_from_dict(doc, source)


def load_scenario(path: str | Path) -> Scenario:
    path = resolve_scenario_path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        return parse_scenario(text, path)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def resolve_scenario_path(path: str | Path) -> Path:
    """Accept a file path or the name of a bundled scenario."""
    p = Path(path)
    if p.exists():
        return p
    for candidate in (BUNDLED_DIR / p.name, BUNDLED_DIR / f"{p.name}.scn"):
        if candidate.exists():
            return candidate
    return p


def _table(obj) -> dict[str, Any]:
    out = {}
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        if value is None:
            continue
        out[f.name] = list(value) if isinstance(value, tuple) else value
    return out


def scenario_to_dict(sc: Scenario) -> dict[str, Any]:
    doc: dict[str, Any] = {"name": sc.name, "mode": sc.mode, "auto_serialize": sc.auto_serialize}
    if sc.schedule_path is not None:
        doc["schedule"] = sc.schedule_path
    doc["clutch"] = _table(sc.clutch)
    motor = _table(sc.motor)
    motor.pop("direction")
    doc["motor"] = motor
    doc["leadscrew"] = _table(sc.leadscrew)
    doc["loss"] = _table(sc.loss)
    doc["latency"] = {"points": [list(row) for row in sc.latency.points]}
    doc["budget"] = _table(sc.budget)
    doc["sim"] = _table(sc.sim)
    units = []
    for u in sc.units:
        t: dict[str, Any] = {"id": u.id}
        if u.load.kind == "hanging_mass":
            t["mass_kg"] = u.load.mass_kg
        else:
            t["tension_N"] = u.load.tension_N
        t["gravity_m_s2"] = u.load.gravity_m_s2
        t["travel_limits_m"] = list(u.travel_limits_m)
        t["initial_position_m"] = u.initial_position_m
        units.append(t)
    doc["units"] = units
    doc["goals"] = [
        {k: v for k, v in dataclasses.asdict(g).items() if v is not None} for g in sc.goals
    ]
    return doc


def serialize_scenario(sc: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(sc))
