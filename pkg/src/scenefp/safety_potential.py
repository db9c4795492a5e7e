"""Safety potential: braking-envelope overlap between agent pairs.

Each agent claims the stretch of road between two hypothetical stopping
procedures started at scene time: an immediate full brake (the near end of
the claim) and a delayed comfortable brake (the far end). Where two agents'
claims overlap, the overlap area is weighted by how long the first agent
would still need to come to a stop, accumulated over a short prediction
horizon. The scalar potential is squashed through tanh for comparability.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import geometry
from .errors import InputError
from .scene import AgentState, Scenario, Scene, Track, track_future_path


@dataclass(frozen=True)
class SafetyProcedureParams:
    a_min: float = -8.0      # m/s^2, immediate full brake
    a_slow: float = -4.0     # m/s^2, delayed comfortable brake
    t_react: float = 0.5     # s, delay before the comfortable brake engages
    horizon: float = 4.0     # s, prediction horizon
    dt_proc: float = 0.1     # s, procedure sampling step
    margin: float = 0.5      # m, safety margin around the footprint
    rho_scale: float = 10.0  # m^2*s, tanh scale for the scalar potential

    def __post_init__(self):
        if not (self.a_min < 0 and self.a_slow < 0):
            raise ValueError("braking decelerations must be negative")
        if self.a_min > self.a_slow:
            raise ValueError("the immediate brake must be at least as strong as the delayed one")
        if self.t_react < 0 or self.horizon <= 0 or self.dt_proc <= 0 or self.margin < 0:
            raise ValueError("invalid procedure timing or margin")
        if self.rho_scale <= 0:
            raise ValueError("rho_scale must be positive")


def fast_procedure(speed0: float, params: SafetyProcedureParams, t: float
                   ) -> Tuple[float, float]:
    """Arc length and speed at time t under an immediate full brake.

    speed(t) = max(speed0 + a_min*t, 0); the arc freezes once the agent
    stands still.
    """
    decel = -params.a_min
    t_halt = speed0 / decel
    speed = max(speed0 - decel * t, 0.0)
    if t < t_halt:
        arc = speed0 * t - 0.5 * decel * t * t
    else:
        arc = speed0 * speed0 / (2.0 * decel)
    return arc, speed


def slow_procedure(speed0: float, params: SafetyProcedureParams, t: float
                   ) -> Tuple[float, float]:
    """Arc length and speed at time t when braking starts after t_react.

    The agent holds its speed during the reaction time, then decelerates at
    a_slow until standstill; the arc freezes afterwards.
    """
    decel = -params.a_slow
    if t <= params.t_react:
        return speed0 * t, speed0
    tau = t - params.t_react
    t_halt = speed0 / decel
    speed = max(speed0 - decel * tau, 0.0)
    if tau < t_halt:
        arc = speed0 * params.t_react + speed0 * tau - 0.5 * decel * tau * tau
    else:
        arc = speed0 * params.t_react + speed0 * speed0 / (2.0 * decel)
    return arc, speed


def t_stop(speed0: float, params: SafetyProcedureParams, t: float) -> float:
    """Remaining stopping time of the delayed brake, evaluated at time t.

    speed'(t)/|a_slow| minus whatever reaction time is still pending,
    floored at zero.
    """
    _, speed_now = slow_procedure(speed0, params, t)
    pending = max(params.t_react - t, 0.0)
    return max(speed_now / -params.a_slow - pending, 0.0)


def _fast_profile(speed0: float, params: SafetyProcedureParams, ts: np.ndarray):
    decel = -params.a_min
    speeds = np.maximum(speed0 - decel * ts, 0.0)
    arcs = np.where(
        speeds > 0.0,
        speed0 * ts - 0.5 * decel * ts * ts,
        speed0 * speed0 / (2.0 * decel),
    )
    return arcs, speeds


def _slow_profile(speed0: float, params: SafetyProcedureParams, ts: np.ndarray):
    decel = -params.a_slow
    tau = np.maximum(ts - params.t_react, 0.0)
    speeds = np.maximum(speed0 - decel * tau, 0.0)
    arcs = np.where(
        speeds > 0.0,
        speed0 * np.minimum(ts, params.t_react) + speed0 * tau - 0.5 * decel * tau * tau,
        speed0 * params.t_react + speed0 * speed0 / (2.0 * decel),
    )
    return arcs, speeds


def path_position(track: Track, t0: float, arc: float) -> Tuple[np.ndarray, np.ndarray]:
    """Point and unit tangent `arc` meters ahead along the recorded path.

    Walks the recorded polyline starting at t0 and extends straight along
    the last direction when the recording runs out.
    """
    walker = _future_walker(track, t0)
    return walker.query_one(arc)


def _future_walker(track: Track, t0: float,
                   params: SafetyProcedureParams = SafetyProcedureParams()) -> geometry.PathWalker:
    idx = track.index_at_time(t0)
    if idx is None:
        raise InputError(f"track {track.agent_id}: no sample at t={t0}")
    path = track_future_path(track, t0, params.horizon)
    heading = float(track.headings[idx])
    return geometry.PathWalker(path, (math.cos(heading), math.sin(heading)))


def _claim_quad(rear_pos, rear_dir, front_pos, front_dir, length, width, margin):
    """Convex quadrilateral spanned by the two anchors, inflated by margin."""
    hl = 0.5 * length + margin
    hw = 0.5 * width + margin
    rx, ry = rear_pos[0] - rear_dir[0] * hl, rear_pos[1] - rear_dir[1] * hl
    fx, fy = front_pos[0] + front_dir[0] * hl, front_pos[1] + front_dir[1] * hl
    rnx, rny = -rear_dir[1], rear_dir[0]
    fnx, fny = -front_dir[1], front_dir[0]
    quad = [
        (rx - rnx * hw, ry - rny * hw),
        (fx - fnx * hw, fy - fny * hw),
        (fx + fnx * hw, fy + fny * hw),
        (rx + rnx * hw, ry + rny * hw),
    ]
    if geometry.signed_area(quad) < 0.0 or not geometry.is_convex(quad):
        # sharp curvature between the anchors; keep the claim convex
        quad = geometry.convex_hull(quad)
    return quad


def occupied_set(state: AgentState, track: Track,
                 params: SafetyProcedureParams, t: float) -> list:
    """Claimed polygon at procedure time t for a procedure started at state.t.

    Spans from the immediate-brake position (rear anchor) to the delayed-
    brake position (front anchor) along the recorded path, extruded by half
    the footprint plus the margin on every side.
    """
    walker = _future_walker(track, state.t, params)
    arc_fast, _ = fast_procedure(state.speed, params, t)
    arc_slow, _ = slow_procedure(state.speed, params, t)
    rear_pos, rear_dir = walker.query_one(arc_fast)
    front_pos, front_dir = walker.query_one(arc_slow)
    return _claim_quad(rear_pos, rear_dir, front_pos, front_dir,
                       state.length, state.width, params.margin)


@dataclass
class ClaimedSet:
    """Per-step claims of one agent over the procedure horizon."""

    agent_id: str
    times: np.ndarray        # procedure times, starting at 0
    polygons: List[list]     # convex claim polygon per step
    t_stops: np.ndarray      # remaining stopping time per step
    centers: np.ndarray      # (n, 2) bounding-circle centers, for prefiltering
    radii: np.ndarray        # (n,) bounding-circle radii

    @property
    def entries(self):
        return list(zip(self.times.tolist(), self.polygons, self.t_stops.tolist()))


def claimed_set(track: Track, t0: float,
                params: SafetyProcedureParams = SafetyProcedureParams()) -> ClaimedSet:
    """All claims of one agent for a procedure started at t0."""
    idx = track.index_at_time(t0)
    if idx is None:
        raise InputError(f"track {track.agent_id}: no sample at t={t0}")
    speed0 = float(track.speeds[idx])
    walker = _future_walker(track, t0, params)

    n_steps = int(round(params.horizon / params.dt_proc))
    ts = np.arange(n_steps + 1) * params.dt_proc
    arcs_fast, _ = _fast_profile(speed0, params, ts)
    arcs_slow, slow_speeds = _slow_profile(speed0, params, ts)
    rear_pos, rear_dir = walker.query(arcs_fast)
    front_pos, front_dir = walker.query(arcs_slow)

    # all quads built in one shot; only curvature-degenerate steps fall back
    hl = 0.5 * track.length + params.margin
    hw = 0.5 * track.width + params.margin
    rear_base = rear_pos - hl * rear_dir
    front_base = front_pos + hl * front_dir
    rperp = np.stack([-rear_dir[:, 1], rear_dir[:, 0]], axis=1)
    fperp = np.stack([-front_dir[:, 1], front_dir[:, 0]], axis=1)
    corners = np.stack([
        rear_base - hw * rperp,
        front_base - hw * fperp,
        front_base + hw * fperp,
        rear_base + hw * rperp,
    ], axis=1)
    edges = np.roll(corners, -1, axis=1) - corners
    nxt = np.roll(edges, -1, axis=1)
    cross = edges[:, :, 0] * nxt[:, :, 1] - edges[:, :, 1] * nxt[:, :, 0]
    convex_ccw = np.all(cross >= -1e-12, axis=1)
    polygons = [
        corners[k] if convex_ccw[k] else
        _claim_quad(rear_pos[k], rear_dir[k], front_pos[k], front_dir[k],
                    track.length, track.width, params.margin)
        for k in range(len(ts))
    ]
    pending = np.maximum(params.t_react - ts, 0.0)
    t_stops = np.maximum(slow_speeds / -params.a_slow - pending, 0.0)

    centers = 0.5 * (rear_pos + front_pos)
    spans = corners - centers[:, None, :]
    radii = np.sqrt((spans * spans).sum(axis=2)).max(axis=1)
    return ClaimedSet(track.agent_id, ts, polygons, t_stops, centers, radii)


def overlap_area(poly_a, poly_b) -> float:
    """Intersection area of two convex polygons, m^2.

    Raises on non-convex input; such input indicates a bug upstream.
    """
    for name, poly in (("first", poly_a), ("second", poly_b)):
        if not geometry.is_convex(poly):
            raise ValueError(f"{name} polygon is not convex")
    a = geometry.ensure_ccw(poly_a)
    b = geometry.ensure_ccw(poly_b)
    return geometry.polygon_area(geometry.clip_convex(a, b))


def _pair_overlaps(cs_a: ClaimedSet, cs_b: ClaimedSet) -> np.ndarray:
    """Per-step claim overlap areas, with a bounding-circle prefilter."""
    n = min(len(cs_a.times), len(cs_b.times))
    areas = np.zeros(n)
    dx = cs_a.centers[:n, 0] - cs_b.centers[:n, 0]
    dy = cs_a.centers[:n, 1] - cs_b.centers[:n, 1]
    near = dx * dx + dy * dy <= (cs_a.radii[:n] + cs_b.radii[:n]) ** 2
    for k in np.nonzero(near)[0]:
        clipped = geometry.clip_convex(cs_a.polygons[k], cs_b.polygons[k])
        areas[k] = geometry.polygon_area(clipped)
    return areas


def rho_from_claimed(cs_a: ClaimedSet, cs_b: ClaimedSet) -> float:
    """Accumulated overlap area weighted by the first agent's stopping time.

    Asymmetric: the weight is cs_a's remaining stopping time per step.
    """
    areas = _pair_overlaps(cs_a, cs_b)
    n = len(areas)
    return float(math.fsum(areas * cs_a.t_stops[:n]))


def rho(agent_a: str, agent_b: str, scenario: Scenario, t0: float,
        params: SafetyProcedureParams = SafetyProcedureParams()) -> float:
    """Scalar safety potential of agent_a against agent_b at scene time t0."""
    cs_a = claimed_set(scenario.tracks[agent_a], t0, params)
    cs_b = claimed_set(scenario.tracks[agent_b], t0, params)
    return rho_from_claimed(cs_a, cs_b)


def rho_norm(rho_raw: float, params: SafetyProcedureParams = SafetyProcedureParams()) -> float:
    """Map a raw potential into [0, 1) with a scaled tanh."""
    return math.tanh(rho_raw / params.rho_scale)


def scene_safety_potential(scene: Scene, scenario: Scenario,
                           params: SafetyProcedureParams = SafetyProcedureParams(),
                           include_vrus: bool = False) -> Dict[str, float]:
    """Normalized per-agent potential: each agent's worst pairing.

    An agent with no partners scores 0.0. Overlaps are computed once per
    unordered pair and weighted with each side's own stopping times.
    """
    vehicles = sorted(s.agent_id for s in scene.vehicles(include_vrus))
    claims = {a: claimed_set(scenario.tracks[a], scene.t, params) for a in vehicles}
    worst = {a: 0.0 for a in vehicles}
    for i, a in enumerate(vehicles):
        for b in vehicles[i + 1:]:
            areas = _pair_overlaps(claims[a], claims[b])
            n = len(areas)
            rho_ab = float(math.fsum(areas * claims[a].t_stops[:n]))
            rho_ba = float(math.fsum(areas * claims[b].t_stops[:n]))
            worst[a] = max(worst[a], rho_ab)
            worst[b] = max(worst[b], rho_ba)
    return {a: rho_norm(v, params) for a, v in worst.items()}


def claimed_set_json(cs: ClaimedSet) -> dict:
    """JSON-friendly dump of a claimed set, for visual debugging."""
    return {
        "agent_id": cs.agent_id,
        "entries": [
            {"t": float(t), "polygon": [[float(x), float(y)] for x, y in poly],
             "t_stop": float(ts)}
            for t, poly, ts in cs.entries
        ],
    }
