import math

import numpy as np
import pytest

from scenefp.scene import (AgentClass, AgentState, Scenario, Scene,
                           build_track, wrap_angle)


def make_state(agent_id="a", t=0.0, x=0.0, y=0.0, vx=0.0, vy=0.0,
               heading=None, acceleration=0.0, length=4.0, width=1.8,
               classification=AgentClass.CAR) -> AgentState:
    velocity = np.array([vx, vy], dtype=float)
    speed = float(math.hypot(vx, vy))
    if heading is None:
        heading = math.atan2(vy, vx) if speed > 1e-12 else 0.0
    return AgentState(agent_id=agent_id, t=t,
                      position=np.array([x, y], dtype=float),
                      heading=wrap_angle(heading), velocity=velocity,
                      speed=speed, acceleration=acceleration,
                      length=length, width=width,
                      classification=classification)


def straight_track(agent_id, x0=0.0, y0=0.0, vx=0.0, vy=0.0, t0=0.0,
                   duration=6.0, dt=0.1, length=4.0, width=1.8,
                   classification=AgentClass.CAR):
    """Constant-velocity track on a regular grid."""
    n = int(round(duration / dt))
    times = t0 + dt * np.arange(n + 1)
    rel = times - t0
    positions = np.stack([x0 + vx * rel, y0 + vy * rel], axis=1)
    return build_track(agent_id, times, positions, length=length,
                       width=width, classification=classification)


def scenario_of(*tracks) -> Scenario:
    return Scenario(tracks={t.agent_id: t for t in tracks})


def scene_of(*states, t=0.0) -> Scene:
    return Scene(t=t, states=list(states))


@pytest.fixture
def closing_pair():
    """Follower at 15 m/s catching a 5 m/s leader 30 m ahead, same lane."""
    follower = straight_track("f", x0=0.0, vx=15.0, duration=3.0)
    leader = straight_track("l", x0=30.0, vx=5.0, duration=3.0)
    return scenario_of(follower, leader)


@pytest.fixture
def crossing_pair():
    """Perpendicular constant-velocity crossing through the origin."""
    a = straight_track("a", x0=-15.0, vx=10.0, duration=4.0)
    b = straight_track("b", y0=-25.0, vy=10.0, duration=4.0)
    return scenario_of(a, b)
