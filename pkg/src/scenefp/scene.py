"""Trajectory recordings: agent states, tracks, scenes, and CSV ingestion.

A recording is a set of tracks sampled on a common fixed-step time grid.
Tracks may start and end at different times but must share the grid step.
"""

import csv
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import InputError, SchemaError

SPEED_EPS = 0.1  # m/s, below this a heading cannot be read off the velocity


class AgentClass(Enum):
    CAR = "car"
    TRUCK_BUS = "truck_bus"
    PEDESTRIAN = "pedestrian"
    BICYCLE = "bicycle"
    OTHER = "other"

    @property
    def is_vru(self):
        return self in (AgentClass.PEDESTRIAN, AgentClass.BICYCLE)


_CLASS_ALIASES = {
    "car": AgentClass.CAR,
    "van": AgentClass.CAR,
    "truck": AgentClass.TRUCK_BUS,
    "bus": AgentClass.TRUCK_BUS,
    "truck_bus": AgentClass.TRUCK_BUS,
    "trailer": AgentClass.TRUCK_BUS,
    "pedestrian": AgentClass.PEDESTRIAN,
    "person": AgentClass.PEDESTRIAN,
    "bicycle": AgentClass.BICYCLE,
    "cyclist": AgentClass.BICYCLE,
    "bike": AgentClass.BICYCLE,
}


def classify_agent(label: Optional[str]) -> AgentClass:
    """Map a free-form dataset class label onto the fixed enum."""
    if label is None:
        return AgentClass.CAR
    return _CLASS_ALIASES.get(label.strip().lower(), AgentClass.OTHER)


def wrap_angle(angle: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(eq=False)
class AgentState:
    """One agent at one instant. Positions are planar world coordinates [m]."""

    agent_id: str
    t: float
    position: np.ndarray          # (2,) center point
    heading: float                # rad, [-pi, pi)
    velocity: np.ndarray          # (2,) m/s
    speed: float                  # |velocity|
    acceleration: float           # signed, along direction of motion, m/s^2
    length: float
    width: float
    classification: AgentClass = AgentClass.CAR

    def heading_vector(self) -> np.ndarray:
        return np.array([math.cos(self.heading), math.sin(self.heading)])

    def validate(self):
        if not self.classification.is_vru and (self.length <= 0.0 or self.width <= 0.0):
            raise InputError(f"agent {self.agent_id}: non-positive footprint dimensions")
        expected = math.hypot(float(self.velocity[0]), float(self.velocity[1]))
        if abs(self.speed - expected) > 1e-6 * max(1.0, expected):
            raise InputError(f"agent {self.agent_id}: speed does not match velocity")
        if not (-math.pi <= self.heading < math.pi + 1e-12):
            raise InputError(f"agent {self.agent_id}: heading not wrapped")


class Track:
    """Time series of one agent's states on a fixed sampling grid."""

    def __init__(self, agent_id, times, positions, velocities, headings,
                 accelerations, length, width, classification=AgentClass.CAR):
        self.agent_id = str(agent_id)
        self.times = np.asarray(times, dtype=float)
        self.positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        self.velocities = np.asarray(velocities, dtype=float).reshape(-1, 2)
        self.headings = np.asarray(headings, dtype=float)
        self.accelerations = np.asarray(accelerations, dtype=float)
        self.length = float(length)
        self.width = float(width)
        self.classification = classification

        n = len(self.times)
        if n == 0:
            raise InputError(f"track {self.agent_id}: no samples")
        for name, arr in (("positions", self.positions), ("velocities", self.velocities),
                          ("headings", self.headings), ("accelerations", self.accelerations)):
            if len(arr) != n:
                raise InputError(f"track {self.agent_id}: {name} length mismatch")
        if n >= 2:
            diffs = np.diff(self.times)
            if np.any(diffs <= 0):
                raise InputError(f"track {self.agent_id}: timestamps not strictly increasing")
            dt = float(np.median(diffs))
            if np.max(np.abs(diffs - dt)) > 1e-6:
                raise InputError(f"track {self.agent_id}: uneven sampling interval")
            self.dt: Optional[float] = dt
        else:
            self.dt = None
        self.speeds = np.hypot(self.velocities[:, 0], self.velocities[:, 1])

    def __len__(self):
        return len(self.times)

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def index_at_time(self, t: float) -> Optional[int]:
        """Grid index whose timestamp matches t (within half a step), else None."""
        dt = self.dt if self.dt else 0.1
        i = int(round((t - self.times[0]) / dt))
        if i < 0 or i >= len(self.times):
            return None
        if abs(self.times[i] - t) > dt / 2 + 1e-9:
            return None
        return i

    def state_at(self, index: int) -> AgentState:
        return AgentState(
            agent_id=self.agent_id,
            t=float(self.times[index]),
            position=self.positions[index].copy(),
            heading=float(self.headings[index]),
            velocity=self.velocities[index].copy(),
            speed=float(self.speeds[index]),
            acceleration=float(self.accelerations[index]),
            length=self.length,
            width=self.width,
            classification=self.classification,
        )

    @property
    def states(self) -> List[AgentState]:
        return [self.state_at(i) for i in range(len(self.times))]


def _headings_from_velocity(velocities, speeds) -> np.ndarray:
    """atan2 of velocity where the agent is actually moving, carried over gaps."""
    n = len(speeds)
    headings = np.zeros(n)
    have = speeds > SPEED_EPS
    last = None
    for i in range(n):
        if have[i]:
            last = math.atan2(velocities[i, 1], velocities[i, 0])
        if last is not None:
            headings[i] = last
    # backfill leading still samples with the first usable heading
    first = next((i for i in range(n) if have[i]), None)
    if first is not None and first > 0:
        headings[:first] = headings[first]
    return np.array([wrap_angle(h) for h in headings])


def build_track(agent_id, times, positions, velocities=None, headings=None,
                accelerations=None, length=4.5, width=1.8,
                classification=AgentClass.CAR) -> Track:
    """Assemble a Track, deriving whatever kinematics were not supplied."""
    times = np.asarray(times, dtype=float)
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    n = len(times)
    if n > 1 and np.any(np.diff(times) <= 0):  # np.gradient would divide by 0
        raise InputError(f"track {agent_id}: timestamps not strictly increasing")
    if velocities is None:
        if n < 2:
            raise InputError(f"track {agent_id}: insufficient states to derive kinematics")
        velocities = np.gradient(positions, times, axis=0)
    else:
        velocities = np.asarray(velocities, dtype=float).reshape(-1, 2)
    speeds = np.hypot(velocities[:, 0], velocities[:, 1])
    if headings is None:
        headings = _headings_from_velocity(velocities, speeds)
    else:
        headings = np.array([wrap_angle(float(h)) for h in np.asarray(headings, dtype=float)])
    if accelerations is None:
        if n >= 2:
            accelerations = np.gradient(speeds, times)
        else:
            accelerations = np.zeros(n)
    return Track(agent_id, times, positions, velocities, headings,
                 accelerations, length, width, classification)


def derive_kinematics(track: Track) -> Track:
    """Recompute velocity, speed, and acceleration from recorded positions.

    Velocity uses central finite differences (one-sided at the endpoints),
    speed is the velocity magnitude, and the signed acceleration is the
    central difference of the speed profile. Positions are untouched.
    """
    if len(track) < 2:
        raise InputError(f"track {track.agent_id}: insufficient states to derive kinematics")
    velocities = np.gradient(track.positions, track.times, axis=0)
    speeds = np.hypot(velocities[:, 0], velocities[:, 1])
    accelerations = np.gradient(speeds, track.times)
    return Track(track.agent_id, track.times, track.positions, velocities,
                 track.headings, accelerations, track.length, track.width,
                 track.classification)


@dataclass
class Scene:
    """All agents present at one grid instant."""

    t: float
    states: List[AgentState]

    def __post_init__(self):
        ids = [s.agent_id for s in self.states]
        if len(set(ids)) != len(ids):
            raise InputError(f"scene at t={self.t}: duplicate agent ids")

    def vehicles(self, include_vrus: bool = False) -> List[AgentState]:
        if include_vrus:
            return list(self.states)
        return [s for s in self.states if not s.classification.is_vru]

    def state_of(self, agent_id: str) -> Optional[AgentState]:
        for s in self.states:
            if s.agent_id == agent_id:
                return s
        return None


class Scenario:
    """A full recording: tracks indexed by agent id, on one shared grid."""

    def __init__(self, tracks: Dict[str, Track]):
        self.tracks: Dict[str, Track] = {k: tracks[k] for k in sorted(tracks)}
        dts = sorted({t.dt for t in self.tracks.values() if t.dt is not None})
        if dts and dts[-1] - dts[0] > 1e-6:
            raise InputError(f"tracks disagree on sampling interval: {dts[0]} vs {dts[-1]}")
        self.dt = dts[0] if dts else 0.1
        for tr in self.tracks.values():
            if tr.dt is None:
                tr.dt = self.dt
        if self.tracks:
            self.times = np.unique(np.concatenate([t.times for t in self.tracks.values()]))
        else:
            self.times = np.array([])
        self._cache: dict = {}  # memo for derived per-pair results (pure data)

    @property
    def time_range(self):
        if len(self.times) == 0:
            return (0.0, 0.0)
        return (float(self.times[0]), float(self.times[-1]))

    def grid_times(self) -> np.ndarray:
        return self.times.copy()


def scene_at(scenario: Scenario, t: float) -> Scene:
    """Snapshot of every track that has a sample at grid time nearest to t.

    t must fall inside the recording range and within half a grid step of a
    sampled instant.
    """
    if len(scenario.times) == 0:
        raise InputError(f"time {t} outside recording range (empty recording)")
    lo, hi = scenario.time_range
    half = scenario.dt / 2 + 1e-9
    if t < lo - half or t > hi + half:
        raise InputError(f"time {t} outside recording range [{lo:.3f}, {hi:.3f}]")
    i = int(np.searchsorted(scenario.times, t))
    best = None
    for j in (i - 1, i, i + 1):
        if 0 <= j < len(scenario.times):
            if best is None or abs(scenario.times[j] - t) < abs(scenario.times[best] - t):
                best = j
    grid_t = float(scenario.times[best])
    if abs(grid_t - t) > half:
        raise InputError(f"time {t} not aligned to the sampling grid (dt={scenario.dt})")
    states = []
    for tr in scenario.tracks.values():
        idx = tr.index_at_time(grid_t)
        if idx is not None:
            states.append(tr.state_at(idx))
    return Scene(grid_t, states)


def track_future_path(track: Track, t: float, horizon: float) -> np.ndarray:
    """Recorded path over [t, t+horizon], extended straight past track end.

    The extension length is the end speed times the uncovered time, so the
    path roughly covers what the agent could traverse within the horizon.
    """
    i0 = track.index_at_time(t)
    if i0 is None:
        raise InputError(f"track {track.agent_id}: no sample at t={t}")
    dt = track.dt if track.dt else 0.1
    i1 = min(len(track) - 1, i0 + int(round(horizon / dt)))
    pts = track.positions[i0:i1 + 1]
    covered = float(track.times[i1] - track.times[i0])
    remaining = horizon - covered
    if remaining > 1e-9:
        end_speed = float(track.speeds[i1])
        extra = end_speed * remaining
        if extra > 1e-9:
            direction = _last_direction(pts, float(track.headings[i1]))
            pts = np.vstack([pts, pts[-1] + direction * extra])
    return pts


def _last_direction(pts: np.ndarray, fallback_heading: float) -> np.ndarray:
    for k in range(len(pts) - 1, 0, -1):
        seg = pts[k] - pts[k - 1]
        norm = math.hypot(seg[0], seg[1])
        if norm > 1e-9:
            return seg / norm
    return np.array([math.cos(fallback_heading), math.sin(fallback_heading)])


# ---------------------------------------------------------------------------
# CSV schemas

@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for one dataset flavour.

    `time_scale` converts the raw time column to seconds. Optional columns
    set to None (or absent from the file) are derived from positions.
    """

    name: str
    track_id: str = "track_id"
    time: str = "timestamp_ms"
    time_scale: float = 1e-3
    x: str = "x"
    y: str = "y"
    vx: Optional[str] = "vx"
    vy: Optional[str] = "vy"
    heading: Optional[str] = "psi_rad"
    heading_unit: str = "rad"
    length: Optional[str] = "length"
    width: Optional[str] = "width"
    agent_type: Optional[str] = "agent_type"
    acceleration: Optional[str] = None


SCHEMAS: Dict[str, CsvSchema] = {
    "interaction": CsvSchema(name="interaction"),
    "ind": CsvSchema(
        name="ind",
        track_id="trackId",
        time="frame",
        time_scale=0.04,
        x="xCenter",
        y="yCenter",
        vx="xVelocity",
        vy="yVelocity",
        heading="heading",
        heading_unit="deg",
        length="length",
        width="width",
        agent_type=None,
        acceleration="lonAcceleration",
    ),
    "generic": CsvSchema(
        name="generic",
        time="t",
        time_scale=1.0,
        acceleration="a",
    ),
}

_VRU_DEFAULT_DIMS = {
    AgentClass.PEDESTRIAN: (0.5, 0.5),
    AgentClass.BICYCLE: (1.8, 0.5),
}


def resolve_schema(schema) -> CsvSchema:
    if isinstance(schema, CsvSchema):
        return schema
    try:
        return SCHEMAS[schema]
    except KeyError:
        raise SchemaError(f"unknown schema {schema!r}; known: {', '.join(sorted(SCHEMAS))}")


def _parse_cell(row, col, line, kind=float):
    cell = row.get(col)
    if cell is None or cell.strip() == "":
        raise InputError(f"line {line}: missing {col!r} value")
    try:
        value = kind(cell)
    except ValueError:
        raise InputError(f"line {line}: invalid {col!r} value {cell.strip()!r}")
    if kind is float and not math.isfinite(value):
        raise InputError(f"line {line}: non-finite {col!r} value")
    return value


def _optional_cell(row, col):
    if col is None or col not in row:
        return None
    cell = row[col]
    if cell is None or cell.strip() == "":
        return None
    return cell


def parse_tracks(source, schema="interaction") -> Scenario:
    """Read a delimited recording into a Scenario.

    `source` is a path or an open text stream. Raises InputError with the
    offending line number for malformed rows and SchemaError when required
    columns are missing.
    """
    schema = resolve_schema(schema)
    if hasattr(source, "read"):
        return _parse_stream(source, schema)
    try:
        handle = open(Path(source), "r", newline="")
    except OSError as exc:
        raise InputError(f"cannot read {source}: {exc.strerror}") from None
    with handle:
        return _parse_stream(handle, schema)


def _parse_stream(handle, schema: CsvSchema) -> Scenario:
    reader = csv.DictReader(handle)
    if reader.fieldnames is None:
        raise SchemaError("input has no header row")
    header = set(reader.fieldnames)
    required = [schema.track_id, schema.time, schema.x, schema.y]
    for col in (schema.length, schema.width, schema.agent_type):
        if col is not None:
            required.append(col)
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)}")

    per_track: Dict[str, dict] = {}
    order: List[str] = []
    for row in reader:
        line = reader.line_num
        if row.get(None):
            raise InputError(f"line {line}: too many fields")
        tid = row.get(schema.track_id)
        if tid is None or tid.strip() == "":
            raise InputError(f"line {line}: missing {schema.track_id!r} value")
        tid = tid.strip()
        rec = per_track.get(tid)
        if rec is None:
            rec = {"times": [], "xs": [], "ys": [], "vxs": [], "vys": [],
                   "headings": [], "accs": [], "length": None, "width": None,
                   "cls": None}
            per_track[tid] = rec
            order.append(tid)

        rec["times"].append(_parse_cell(row, schema.time, line) * schema.time_scale)
        rec["xs"].append(_parse_cell(row, schema.x, line))
        rec["ys"].append(_parse_cell(row, schema.y, line))

        vx = _optional_cell(row, schema.vx)
        vy = _optional_cell(row, schema.vy)
        if vx is not None and vy is not None:
            rec["vxs"].append(_parse_cell(row, schema.vx, line))
            rec["vys"].append(_parse_cell(row, schema.vy, line))
        else:
            rec["vxs"].append(None)
            rec["vys"].append(None)

        h = _optional_cell(row, schema.heading)
        rec["headings"].append(_parse_cell(row, schema.heading, line) if h is not None else None)
        a = _optional_cell(row, schema.acceleration)
        rec["accs"].append(_parse_cell(row, schema.acceleration, line) if a is not None else None)

        if rec["cls"] is None:
            label = _optional_cell(row, schema.agent_type)
            rec["cls"] = classify_agent(label)
            cls = rec["cls"]
            for dim_key, col in (("length", schema.length), ("width", schema.width)):
                cell = _optional_cell(row, col)
                if cell is not None:
                    rec[dim_key] = _parse_cell(row, col, line)
                elif cls.is_vru:
                    rec[dim_key] = _VRU_DEFAULT_DIMS[cls][0 if dim_key == "length" else 1]
                else:
                    raise InputError(f"line {line}: missing {col!r} value")

    tracks: Dict[str, Track] = {}
    for tid in order:
        rec = per_track[tid]
        times = np.asarray(rec["times"])
        if len(times) >= 2 and np.any(np.diff(times) <= 0):
            raise InputError(f"track {tid}: timestamps not strictly increasing")
        positions = np.column_stack([rec["xs"], rec["ys"]])
        velocities = None
        if all(v is not None for v in rec["vxs"]):
            velocities = np.column_stack([rec["vxs"], rec["vys"]])
        headings = None
        if all(h is not None for h in rec["headings"]):
            headings = np.asarray(rec["headings"], dtype=float)
            if schema.heading_unit == "deg":
                headings = np.radians(headings)
        accelerations = None
        if all(a is not None for a in rec["accs"]):
            accelerations = np.asarray(rec["accs"], dtype=float)
        tracks[tid] = build_track(
            tid, times, positions, velocities=velocities, headings=headings,
            accelerations=accelerations, length=rec["length"], width=rec["width"],
            classification=rec["cls"],
        )
    return Scenario(tracks)


def write_tracks(scenario: Scenario, dest, schema="generic"):
    """Serialize a Scenario back to delimited text (full float precision)."""
    schema = resolve_schema(schema)
    for col in (schema.vx, schema.vy, schema.heading, schema.length,
                schema.width, schema.agent_type, schema.acceleration):
        if col is None:
            raise SchemaError(f"schema {schema.name!r} cannot express a full track for writing")

    def emit(handle):
        writer = csv.writer(handle)
        writer.writerow([schema.track_id, schema.time, schema.x, schema.y,
                         schema.vx, schema.vy, schema.heading, schema.length,
                         schema.width, schema.agent_type, schema.acceleration])
        for tid, tr in scenario.tracks.items():
            for i in range(len(tr)):
                heading = tr.headings[i]
                if schema.heading_unit == "deg":
                    heading = math.degrees(heading)
                writer.writerow([
                    tid,
                    repr(float(tr.times[i] / schema.time_scale)),
                    repr(float(tr.positions[i, 0])),
                    repr(float(tr.positions[i, 1])),
                    repr(float(tr.velocities[i, 0])),
                    repr(float(tr.velocities[i, 1])),
                    repr(float(heading)),
                    repr(tr.length),
                    repr(tr.width),
                    tr.classification.value,
                    repr(float(tr.accelerations[i])),
                ])

    if hasattr(dest, "write"):
        emit(dest)
    else:
        with open(Path(dest), "w", newline="") as handle:
            emit(handle)
