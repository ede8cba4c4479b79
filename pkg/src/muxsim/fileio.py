"""Tabular and text file formats: traces, events, energy reports, timelines,
and calibration data."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable

import numpy as np

from .calibration import EfficiencyPoint, TorqueVoltagePoint
from .logic import ClutchPairState
from .scheduler import MODES, Schedule, ScheduleEvent
from .sim import EnergyReport, SimTrace

TIMELINE_MAGIC = "# muxsim timeline v1"

GLOBAL_COLUMNS = ("time_s", "shaft_rpm", "total_torque_Nm", "total_power_W")
UNIT_COLUMNS = ("position_m", "state", "torque_Nm", "tension_N")
GLOBAL_FORMATS = ("{:.6f}", "{:.3f}", "{:.6f}", "{:.6f}")
UNIT_FORMATS = ("{:.9f}", "{}", "{:.6f}", "{:.4f}")


class DataError(ValueError):
    """Malformed input data file."""


def trace_header(unit_ids: Iterable[int]) -> list[str]:
    cols = list(GLOBAL_COLUMNS)
    for uid in unit_ids:
        cols += [f"u{uid}_{c}" for c in UNIT_COLUMNS]
    return cols


def trace_csv(trace: SimTrace) -> str:
    """Render a trace as CSV text with a fixed column order and precision."""
    ids = sorted(trace.units)
    lines = [",".join(trace_header(ids))]
    cols = [trace.time_s, trace.shaft_rpm, trace.total_torque_Nm, trace.total_power_W]
    fmts = list(GLOBAL_FORMATS)
    for uid in ids:
        ut = trace.units[uid]
        cols += [ut.position_m, ut.state, ut.torque_Nm, ut.tension_N]
        fmts += UNIT_FORMATS
    row_fmt = ",".join(fmts)
    for row in zip(*cols):
        lines.append(row_fmt.format(*row))
    return "\n".join(lines) + "\n"


def read_trace_csv(path: str | Path) -> dict[str, np.ndarray | list[str]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    out: dict[str, np.ndarray | list[str]] = {}
    for j, name in enumerate(header):
        col = [r[j] for r in rows]
        out[name] = col if name.endswith("_state") else np.array(col, dtype=float)
    return out


def events_csv(trace: SimTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time_s", "unit_id", "old_state", "new_state"])
    for t, uid, old, new in trace.events:
        w.writerow([f"{t:.6f}", uid, old, new])
    return buf.getvalue()


def energy_text(report: EnergyReport) -> str:
    return "".join(f"{k} = {v:.10g}\n" for k, v in report.as_dict().items())


def parse_energy_text(text: str) -> dict[str, float]:
    out = {}
    for line in text.splitlines():
        if line.strip() and not line.startswith("#"):
            key, _, value = line.partition("=")
            out[key.strip()] = float(value)
    return out


def timeline_text(s: Schedule) -> str:
    lines = [TIMELINE_MAGIC, f"mode {s.mode}", f"horizon {s.horizon_s!r}", "# time_s unit_id c1c2"]
    lines += [f"{e.time_s!r} {e.unit_id} {e.state}" for e in s.events]
    return "\n".join(lines) + "\n"


def parse_timeline(text: str) -> Schedule:
    """Parse the plain-text timeline format; errors name the line number."""
    mode, horizon = "siso", None
    events = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "mode":
                mode = parts[1]
                if mode not in MODES:
                    raise ValueError(f"mode must be one of {MODES}")
            elif parts[0] == "horizon":
                horizon = float(parts[1])
            else:
                if len(parts) != 3:
                    raise ValueError("expected: time_s unit_id c1c2")
                events.append(ScheduleEvent(float(parts[0]), int(parts[1]), ClutchPairState.parse(parts[2])))
        except (ValueError, IndexError) as exc:
            raise DataError(f"line {n}: {exc}") from None
    if horizon is None:
        horizon = max((e.time_s for e in events), default=0.0)
    return Schedule(events, mode, horizon)


def _read_rows(path: str | Path, required: tuple[str, ...], optional: tuple[str, ...] = ()) -> list[list[float]]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc.strerror})") from None
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: no data")
    header = [c.strip() for c in rows[0]]
    allowed = list(required + optional)
    if header[: len(required)] != list(required) or header != allowed[: len(header)]:
        raise DataError(f"{path}: header must be {','.join(allowed)}")
    out = []
    for n, r in enumerate(rows[1:], 2):
        try:
            out.append([float(c) for c in r[: len(header)]])
        except ValueError:
            raise DataError(f"{path}: line {n}: non-numeric value") from None
    if not out:
        raise DataError(f"{path}: no data rows")
    return out


def read_torque_voltage_csv(path: str | Path) -> list[TorqueVoltagePoint]:
    try:
        return [TorqueVoltagePoint(v, t) for v, t in _read_rows(path, ("voltage_V", "torque_Nm"))]
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"{path}: {exc}") from None


def read_efficiency_csv(path: str | Path) -> list[EfficiencyPoint]:
    try:
        return [EfficiencyPoint(*row) for row in _read_rows(path, ("load_N", "efficiency"), ("rpm",))]
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"{path}: {exc}") from None


def write_outputs(out_dir: str | Path, files: dict[str, str]) -> list[Path]:
    """Write all files or none: stage in a temp dir, then move into place."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    with tempfile.TemporaryDirectory(dir=out_dir, prefix=".staging-") as tmp:
        staged = []
        for name, content in files.items():
            p = Path(tmp) / name
            p.write_text(content)
            staged.append((p, out_dir / name))
        for src, dst in staged:
            os.replace(src, dst)
            written.append(dst)
    return written
