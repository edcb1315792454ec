"""File formats: trajectories, waypoints, simulation logs, key-value configs.

Floats are written with ``repr`` so every CSV/JSON file reloads bit-exactly.
All writers go through :func:`atomic_write_text` (temp file + rename).
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import tempfile
from dataclasses import fields
from pathlib import Path

import numpy as np

from .control import GainSet
from .docking import parse_trajectory_record, trajectory_record
from .errors import ConfigError, SchemaError
from .plant import DroneParams
from .scaling import WaypointList
from .simulation import SimLog, TrackingMetrics
from .trajectory import FRAMES, SampledTrajectory

TRAJ_FIELDS = ["t", "x", "y", "z", "vx", "vy", "vz", "frame"]
WAYPOINT_FIELDS = ["k", "t", "x", "y", "z"]
LOG_FIELDS = ["t", "wx", "wy", "wz", "x", "y", "z", "fz", "mx", "my", "mz"]
PLOT_FIELDS = ["t", "wx", "x", "wy", "y", "wz", "z"]


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows, preamble: str = "") -> str:
    buf = _io.StringIO()
    buf.write(preamble)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_csv(path, required) -> list[dict]:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    missing = [f for f in required if f not in (reader.fieldnames or [])]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {missing}")
    return list(reader)


def _float(v, where) -> float:
    try:
        return float(v)
    except (TypeError, ValueError):
        raise SchemaError(f"{where}: {v!r} is not a number") from None


def dump_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=False) + "\n"


# trajectories

def trajectory_csv(traj: SampledTrajectory) -> str:
    rows = [
        [repr(float(t)), *(repr(float(v)) for v in s), traj.frame]
        for t, s in zip(traj.times, traj.states)
    ]
    return _csv_text(TRAJ_FIELDS, rows)


def trajectory_json_records(traj: SampledTrajectory) -> list[dict]:
    keys = TRAJ_FIELDS[1:7]
    return [
        {"t": float(t), **{k: float(v) for k, v in zip(keys, s)}, "frame": traj.frame}
        for t, s in zip(traj.times, traj.states)
    ]


def write_trajectory(path, traj: SampledTrajectory, fmt: str | None = None) -> None:
    """``fmt``: ``csv``, ``json`` (records) or ``record`` (times/states document)."""
    fmt = fmt or ("csv" if str(path).endswith(".csv") else "json")
    if fmt == "csv":
        atomic_write_text(path, trajectory_csv(traj))
    elif fmt == "json":
        atomic_write_text(path, dump_json(trajectory_json_records(traj)))
    elif fmt == "record":
        atomic_write_text(path, dump_json(trajectory_record(traj)))
    else:
        raise ConfigError(f"unknown trajectory format {fmt!r}")


def _trajectory_from_rows(rows, where) -> SampledTrajectory:
    if not rows:
        raise SchemaError(f"{where}: no samples")
    frames = {r.get("frame", "space") for r in rows}
    if len(frames) != 1 or not frames <= set(FRAMES):
        raise SchemaError(f"{where}: inconsistent or unknown frame tags {sorted(frames)}")
    times = [_float(r["t"], where) for r in rows]
    states = [[_float(r[k], where) for k in TRAJ_FIELDS[1:7]] for r in rows]
    return parse_trajectory_record({"times": times, "states": states, "frame": frames.pop()})


def read_trajectory(path) -> SampledTrajectory:
    """Load CSV, JSON records, or a times/states trajectory record."""
    path = Path(path)
    if path.suffix == ".csv":
        return _trajectory_from_rows(_read_csv(path, TRAJ_FIELDS[:7]), path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    if isinstance(doc, list):
        for i, r in enumerate(doc):
            if not isinstance(r, dict) or any(k not in r for k in TRAJ_FIELDS[:7]):
                raise SchemaError(f"{path}: record {i} lacks one of {TRAJ_FIELDS[:7]}")
        return _trajectory_from_rows(doc, path)
    return parse_trajectory_record(doc)


# waypoints

def waypoints_csv(wps: WaypointList) -> str:
    rows = [
        [k, f"{k / wps.frequency:.6f}", *(repr(float(v)) for v in p)]
        for k, p in enumerate(wps.positions)
    ]
    return _csv_text(WAYPOINT_FIELDS, rows, preamble=f"# frequency_hz={wps.frequency!r}\n")


def waypoints_json(wps: WaypointList) -> dict:
    return {
        "frequency": wps.frequency,
        "waypoints": [
            {"k": k, "t": round(k / wps.frequency, 6), "x": float(p[0]), "y": float(p[1]), "z": float(p[2])}
            for k, p in enumerate(wps.positions)
        ],
    }


def write_waypoints(path, wps: WaypointList) -> None:
    if str(path).endswith(".csv"):
        atomic_write_text(path, waypoints_csv(wps))
    else:
        atomic_write_text(path, dump_json(waypoints_json(wps)))


def _frequency_from_times(ts) -> float:
    """Simplest frequency whose 6-decimal sample times reproduce ``ts``."""
    if len(ts) < 2:
        raise SchemaError("cannot infer waypoint frequency from fewer than two rows")
    ts = np.asarray(ts, dtype=float)
    raw = (ts.size - 1) / (ts[-1] - ts[0])
    k = np.arange(ts.size)
    for digits in range(7):
        f = round(raw, digits)
        if f > 0 and np.all(np.abs(np.round(k / f, 6) - ts) < 5e-7):
            return float(f)
    return float(raw)


def read_waypoints(path) -> WaypointList:
    path = Path(path)
    if path.suffix == ".csv":
        text = path.read_text()
        freq = None
        for ln in text.splitlines():
            if ln.startswith("# frequency_hz="):
                freq = _float(ln.split("=", 1)[1], path)
        rows = _read_csv(path, WAYPOINT_FIELDS)
        if freq is None:
            freq = _frequency_from_times([_float(r["t"], path) for r in rows])
        pos = [[_float(r[a], path) for a in "xyz"] for r in rows]
    else:
        doc = json.loads(path.read_text())
        if not isinstance(doc, dict) or "waypoints" not in doc:
            raise SchemaError(f"{path}: expected an object with a 'waypoints' list")
        rows = doc["waypoints"]
        freq = doc.get("frequency")
        if freq is None:
            freq = _frequency_from_times([_float(r["t"], path) for r in rows])
        try:
            pos = [[_float(r[a], path) for a in "xyz"] for r in rows]
        except KeyError as exc:
            raise SchemaError(f"{path}: waypoint missing field {exc}") from None
    for i, r in enumerate(rows):
        if int(r["k"]) != i:
            raise SchemaError(f"{path}: waypoint index {r['k']} at row {i}")
    if not pos:
        raise SchemaError(f"{path}: no waypoints")
    return WaypointList(float(freq), np.array(pos))


# simulation logs

def simlog_csv(log: SimLog) -> str:
    rows = []
    for i in range(len(log)):
        vals = [log.times[i], *log.waypoints[i], *log.positions[i], log.thrust[i], *log.commands[i, 1:]]
        rows.append([repr(float(v)) for v in vals])
    return _csv_text(LOG_FIELDS, rows)


def simlog_json(log: SimLog) -> dict:
    return {
        "columns": {
            "state": ["x", "y", "z", "u", "v", "w", "phi", "theta", "psi", "p", "q", "r"],
            "command": ["dFz", "Mx", "My", "Mz"],
        },
        "times": log.times.tolist(),
        "waypoints": log.waypoints.tolist(),
        "states": log.states.tolist(),
        "commands": log.commands.tolist(),
        "thrust": log.thrust.tolist(),
    }


def read_simlog_json(path) -> SimLog:
    doc = json.loads(Path(path).read_text())
    try:
        return SimLog(*(np.asarray(doc[k], dtype=float) for k in ("times", "waypoints", "states", "commands", "thrust")))
    except KeyError as exc:
        raise SchemaError(f"{path}: missing field {exc}") from None


def write_simlog(path, log: SimLog) -> None:
    if str(path).endswith(".csv"):
        atomic_write_text(path, simlog_csv(log))
    else:
        atomic_write_text(path, dump_json(simlog_json(log)))


def plot_data_csv(log: SimLog) -> str:
    rows = []
    for i in range(len(log)):
        w, p = log.waypoints[i], log.positions[i]
        rows.append([repr(float(v)) for v in (log.times[i], w[0], p[0], w[1], p[1], w[2], p[2])])
    return _csv_text(PLOT_FIELDS, rows)


def write_metrics(path, metrics: TrackingMetrics, extra: dict | None = None) -> None:
    doc = metrics.as_dict()
    if extra:
        doc.update(extra)
    atomic_write_text(path, dump_json(doc))


# key-value configs

def parse_kv(text: str, where: str = "<config>") -> dict[str, str]:
    """``key = value`` per line; ``#`` starts a comment; later keys win."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{where}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{where}:{lineno}: empty key")
        out[key] = value
    return out


def read_kv(path) -> dict[str, str]:
    return parse_kv(Path(path).read_text(), str(path))


def _parse_bool(v: str, key: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: not a boolean: {v!r}")


def _parse_numbers(v: str, key: str):
    try:
        vals = [float(x) for x in v.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{key}: not numeric: {v!r}") from None
    if len(vals) == 1:
        return vals[0]
    if len(vals) == 3:
        return tuple(vals)
    raise ConfigError(f"{key}: expected 1 or 3 numbers, got {len(vals)}")


def gains_from_kv(kv: dict[str, str]) -> GainSet:
    known = {f.name for f in fields(GainSet)}
    kwargs = {}
    for key, value in kv.items():
        if key not in known:
            raise ConfigError(f"unknown gain key {key!r}")
        if key == "velocity_feedforward":
            kwargs[key] = _parse_bool(value, key)
        else:
            kwargs[key] = _parse_numbers(value, key)
            if key in ("i_clamp", "thrust_cap", "moment_cap") and isinstance(kwargs[key], tuple):
                raise ConfigError(f"{key} takes a single number")
    return GainSet(**kwargs)


def gains_to_kv(g: GainSet) -> str:
    lines = ["# controller gains (position: 1/s^2, 1/s^3, 1/s; attitude: N m/rad, N m s/rad)"]
    for f in fields(GainSet):
        v = getattr(g, f.name)
        if isinstance(v, tuple):
            lines.append(f"{f.name} = {', '.join(repr(x) for x in v)}")
        elif isinstance(v, bool):
            lines.append(f"{f.name} = {'true' if v else 'false'}")
        else:
            lines.append(f"{f.name} = {v!r}")
    return "\n".join(lines) + "\n"


def params_from_kv(kv: dict[str, str]) -> DroneParams:
    known = {f.name for f in fields(DroneParams)}
    kwargs = {}
    for key, value in kv.items():
        if key not in known:
            raise ConfigError(f"unknown drone parameter {key!r}")
        v = _parse_numbers(value, key)
        if isinstance(v, tuple):
            raise ConfigError(f"{key} takes a single number")
        kwargs[key] = v
    return DroneParams(**kwargs)


def params_to_kv(p: DroneParams) -> str:
    lines = ["# drone parameters (kg, kg m^2, m/s^2)"]
    lines += [f"{f.name} = {getattr(p, f.name)!r}" for f in fields(DroneParams)]
    return "\n".join(lines) + "\n"
