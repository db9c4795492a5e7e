"""Traffic quality: speed-dispersion statistics at four zoom levels.

All four values rate disturbance of smooth flow; larger means more critical.
They are already scaled so that the framework only needs to clamp them into
[0, 1].

macro  ratio of speed spread to mean speed over the whole scene
micro  share of vehicles inside the ego's braking-distance radius
nano   speed spread ratio restricted to that radius
indi   ego's own recent acceleration and speed against reference values
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .scene import AgentState, Track


@dataclass(frozen=True)
class TqConfig:
    a_brake: float = 4.0     # m/s^2, assumed comfortable deceleration
    t_react: float = 1.0     # s, reaction time before braking
    nu_ref: float = 13.89    # m/s, reference speed (50 km/h)
    a_ref: float = 2.0       # m/s^2, reference acceleration magnitude
    window: float = 3.0      # s, trailing window for the individual value
    eps_speed: float = 0.1   # m/s, clamps the mean-speed denominator

    def __post_init__(self):
        for name in ("a_brake", "t_react", "nu_ref", "a_ref", "window", "eps_speed"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def braking_distance(speed: float, config: TqConfig = TqConfig()) -> float:
    """Reaction distance plus braking distance at constant deceleration."""
    return speed * config.t_react + speed * speed / (2.0 * config.a_brake)


def tq_macro(states: Sequence[AgentState], config: TqConfig = TqConfig()) -> Optional[float]:
    """Speed standard deviation over mean speed, whole scene.

    Population statistics; the mean is clamped from below so an all-stopped
    scene comes out at 0 instead of dividing by zero. Undefined for an empty
    scene.
    """
    if not states:
        return None
    speeds = np.array([s.speed for s in states])
    return float(np.std(speeds) / max(float(np.mean(speeds)), config.eps_speed))


def _within_braking_radius(states, ego, config) -> List[AgentState]:
    radius = braking_distance(ego.speed, config)
    out = []
    for s in states:
        d = math.hypot(float(s.position[0] - ego.position[0]),
                       float(s.position[1] - ego.position[1]))
        if d <= radius:
            out.append(s)
    return out


def tq_micro(states: Sequence[AgentState], ego_id: str,
             config: TqConfig = TqConfig()) -> Optional[float]:
    """Fraction of vehicles within the ego's braking-distance radius.

    The ego always counts itself (distance 0), so the value is at least
    1/n. Undefined when the ego is not in the scene.
    """
    ego = next((s for s in states if s.agent_id == ego_id), None)
    if ego is None or not states:
        return None
    inside = _within_braking_radius(states, ego, config)
    return len(inside) / len(states)


def tq_nano(states: Sequence[AgentState], ego_id: str,
            config: TqConfig = TqConfig()) -> Optional[float]:
    """Speed spread ratio restricted to the ego's braking-distance radius."""
    ego = next((s for s in states if s.agent_id == ego_id), None)
    if ego is None:
        return None
    inside = _within_braking_radius(states, ego, config)
    speeds = np.array([s.speed for s in inside])
    return float(np.std(speeds) / max(float(np.mean(speeds)), config.eps_speed))


def tq_indi(track: Track, t: float, config: TqConfig = TqConfig()) -> Optional[float]:
    """Ego-only disturbance over the trailing window ending at t.

    Mean absolute acceleration against a_ref and mean speed against nu_ref,
    averaged. The window is truncated at the track start; undefined when the
    track does not cover t at all.
    """
    mask = (track.times >= t - config.window - 1e-9) & (track.times <= t + 1e-9)
    if not mask.any():
        return None
    mean_acc = float(np.mean(np.abs(track.accelerations[mask])))
    mean_speed = float(np.mean(track.speeds[mask]))
    return 0.5 * (mean_acc / config.a_ref + mean_speed / config.nu_ref)
