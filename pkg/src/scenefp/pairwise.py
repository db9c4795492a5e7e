"""Pairwise criticality measures between two agents.

Covers plain separation (Euclidean distance, worst-case time-to-collision),
car-following time-to-collision, and the conflict-zone family (trajectory
distance, gap time, encroachment time, post-encroachment time) built on the
first crossing of the two agents' future paths.
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from . import geometry
from .errors import InputError
from .scene import AgentState, Scene, Track, track_future_path

LATERAL_GATE = 2.0                 # m, max lateral offset for a following pair
HEADING_GATE = math.radians(30.0)  # rad, max heading disagreement
ZONE_HORIZON = 10.0                # s, how far ahead paths are searched for a crossing
STRIP_HALF_LENGTH = 25.0           # m, caps the conflict-zone strip extent

_OCCUPANCY_TOL = 1e-9              # m^2, overlap below this does not count as presence


@dataclass(frozen=True)
class PairwiseConfig:
    lateral_gate: float = LATERAL_GATE
    heading_gate: float = HEADING_GATE
    horizon: float = ZONE_HORIZON

    def __post_init__(self):
        if self.lateral_gate <= 0 or self.heading_gate <= 0 or self.horizon <= 0:
            raise ValueError("pairwise gates and horizon must be positive")


def euclidean_distance(a: AgentState, b: AgentState) -> float:
    """Center-to-center distance in meters."""
    return math.hypot(float(a.position[0] - b.position[0]),
                      float(a.position[1] - b.position[1]))


def leader_follower(a: AgentState, b: AgentState,
                    lateral_gate: float = LATERAL_GATE,
                    heading_gate: float = HEADING_GATE
                    ) -> Optional[Tuple[AgentState, AgentState]]:
    """Order two agents into (follower, leader) if they form a following pair.

    Both must head the same way (within heading_gate), b must sit within
    lateral_gate of a's heading ray, and one must be strictly ahead along
    that ray. Returns None when the pair does not qualify.
    """
    from .scene import wrap_angle

    if abs(wrap_angle(a.heading - b.heading)) > heading_gate:
        return None
    fwd = a.heading_vector()
    d = b.position - a.position
    along = float(fwd[0] * d[0] + fwd[1] * d[1])
    lateral = abs(float(fwd[0] * d[1] - fwd[1] * d[0]))
    if lateral >= lateral_gate:
        return None
    if along > 0.0:
        return a, b
    if along < 0.0:
        return b, a
    return None


def ttc(follower: AgentState, leader: AgentState) -> Optional[float]:
    """Time to collision for a following pair, seconds.

    The gap is the center distance minus both half-lengths (bumper gap).
    0.0 means the footprints already overlap; None means the gap is opening.
    """
    gap = euclidean_distance(follower, leader) - 0.5 * (follower.length + leader.length)
    if gap <= 0.0:
        return 0.0
    closing = follower.speed - leader.speed
    if closing <= 0.0:
        return None
    return gap / closing


def wttc(a: AgentState, b: AgentState) -> Optional[float]:
    """Worst-case time to collision, seconds.

    Each agent is abstracted as a disc of half its footprint diagonal; the
    remaining gap is consumed at the combined current speeds.
    """
    r_a = 0.5 * math.hypot(a.length, a.width)
    r_b = 0.5 * math.hypot(b.length, b.width)
    dist = euclidean_distance(a, b)
    gap = dist - r_a - r_b
    if gap <= 0.0:
        return 0.0
    combined = a.speed + b.speed
    if combined <= 0.0:
        return None
    return gap / combined


# ---------------------------------------------------------------------------
# Conflict zones

@dataclass
class ConflictZone:
    """Shared crossing region of two agents' future paths.

    `area` is the convex zone polygon (intersection of the two width-oriented
    strips at the crossing); arc_a/arc_b measure each agent's path distance
    from its current position to zone entry (0 when already inside).
    """

    agent_a: str
    agent_b: str
    point: np.ndarray
    area: list
    arc_a: float
    arc_b: float


@dataclass(frozen=True)
class ZonePassage:
    t_enter: float
    t_exit: float


def conflict_zone(track_a: Track, track_b: Track, t: float,
                  horizon: float = ZONE_HORIZON) -> Optional[ConflictZone]:
    """First crossing of the two future paths over [t, t+horizon], or None.

    Paths are the recorded polylines, extended straight when a track ends
    inside the horizon. Parallel paths (including exact following) produce
    no zone.
    """
    path_a = track_future_path(track_a, t, horizon)
    path_b = track_future_path(track_b, t, horizon)
    pad = 0.5 * max(track_a.width, track_b.width) + 0.5
    if not geometry.bounds_overlap(geometry.bounds(path_a), geometry.bounds(path_b), pad=pad):
        return None
    crossing = geometry.first_polyline_crossing(path_a, path_b)
    if crossing is None:
        return None
    point, arc_a_pt, arc_b_pt, dir_a, dir_b = crossing

    strip_a = geometry.rect_corners(point, dir_a, STRIP_HALF_LENGTH, track_a.width / 2.0)
    strip_b = geometry.rect_corners(point, dir_b, STRIP_HALF_LENGTH, track_b.width / 2.0)
    zone = geometry.clip_convex(strip_a, strip_b)
    if geometry.polygon_area(zone) <= _OCCUPANCY_TOL:
        return None
    zone = geometry.ensure_ccw(zone)

    arc_a = geometry.polyline_entry_arc(path_a, zone)
    arc_b = geometry.polyline_entry_arc(path_b, zone)
    return ConflictZone(
        agent_a=track_a.agent_id,
        agent_b=track_b.agent_id,
        point=np.asarray(point, dtype=float),
        area=zone,
        arc_a=float(arc_a) if arc_a is not None else float(arc_a_pt),
        arc_b=float(arc_b) if arc_b is not None else float(arc_b_pt),
    )


def _zone_key(zone: ConflictZone) -> tuple:
    return tuple((round(x, 6), round(y, 6)) for x, y in zone.area)


def _footprint(track: Track, index: int) -> list:
    pos = track.positions[index]
    h = float(track.headings[index])
    direction = (math.cos(h), math.sin(h))
    return geometry.rect_corners(pos, direction, track.length / 2.0, track.width / 2.0)


def zone_passage(track: Track, zone: ConflictZone, cache: Optional[dict] = None
                 ) -> Optional[ZonePassage]:
    """First contiguous interval during which the footprint overlaps the zone.

    Occupancy is sampled on the recording grid, so entry/exit carry up to
    one grid step of quantization. None when the track never occupies the
    zone.
    """
    key = None
    if cache is not None:
        key = ("passage", track.agent_id, _zone_key(zone))
        if key in cache:
            return cache[key]

    zc = zone.point
    zone_radius = max(math.hypot(x - zc[0], y - zc[1]) for x, y in zone.area)
    reach = 0.5 * math.hypot(track.length, track.width) + zone_radius + 1e-6
    d2 = ((track.positions - zc[None, :]) ** 2).sum(axis=1)
    candidates = np.nonzero(d2 <= reach * reach)[0]

    # samples outside the candidate set cannot overlap, so occupancy runs live
    # entirely inside it; scan until the first run closes
    occupied = []
    for i in candidates:
        footprint = _footprint(track, int(i))
        if geometry.polygon_area(geometry.clip_convex(footprint, zone.area)) > _OCCUPANCY_TOL:
            occupied.append(int(i))
        elif occupied:
            break
    result = None
    if occupied:
        start = end = occupied[0]
        for i in occupied[1:]:
            if i == end + 1:
                end = i
            else:
                break  # a pruned gap separates runs; keep the first one
        result = ZonePassage(float(track.times[start]), float(track.times[end]))

    if cache is not None:
        cache[key] = result
    return result


def pet(track_a: Track, track_b: Track, zone: ConflictZone,
        cache: Optional[dict] = None) -> Optional[float]:
    """Post-encroachment time: second arrival minus first clearance, seconds.

    Floored at zero when the occupancies overlap. Undefined when either
    agent never occupies the zone.
    """
    pa = zone_passage(track_a, zone, cache)
    pb = zone_passage(track_b, zone, cache)
    if pa is None or pb is None:
        return None
    first, second = _order_passages(track_a.agent_id, pa, track_b.agent_id, pb)
    return max(0.0, second[1].t_enter - first[1].t_exit)


def et(track: Track, zone: ConflictZone, cache: Optional[dict] = None) -> Optional[float]:
    """Encroachment time: duration of the track's first zone occupancy."""
    passage = zone_passage(track, zone, cache)
    if passage is None:
        return None
    return passage.t_exit - passage.t_enter


def pair_encroachment_time(track_a: Track, track_b: Track, zone: ConflictZone,
                           cache: Optional[dict] = None) -> Optional[float]:
    """Occupancy duration of whichever agent clears the zone first."""
    pa = zone_passage(track_a, zone, cache)
    pb = zone_passage(track_b, zone, cache)
    if pa is None or pb is None:
        return None
    first, _ = _order_passages(track_a.agent_id, pa, track_b.agent_id, pb)
    return first[1].t_exit - first[1].t_enter


def _order_passages(id_a, pa, id_b, pb):
    """Sort two passages by exit time; equal exits fall back to agent id."""
    if (pa.t_exit, id_a) <= (pb.t_exit, id_b):
        return (id_a, pa), (id_b, pb)
    return (id_b, pb), (id_a, pa)


def gap_time(scene: Scene, zone: ConflictZone, speed_eps: float = 0.1) -> Optional[float]:
    """Difference of predicted zone arrival times at frozen current speeds.

    Undefined unless both agents are present and moving faster than
    speed_eps.
    """
    sa = scene.state_of(zone.agent_a)
    sb = scene.state_of(zone.agent_b)
    if sa is None or sb is None:
        return None
    if sa.speed <= speed_eps or sb.speed <= speed_eps:
        return None
    return abs(zone.arc_a / sa.speed - zone.arc_b / sb.speed)


def trajectory_distance(state: AgentState, zone: ConflictZone, which: str) -> float:
    """Path arc length from the chosen agent's position to zone entry."""
    if which == "a":
        return zone.arc_a
    if which == "b":
        return zone.arc_b
    raise InputError(f"which must be 'a' or 'b', got {which!r}")
