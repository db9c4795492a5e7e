import io
import math

import numpy as np
import pytest

from scenefp.errors import InputError, SchemaError
from scenefp.scene import (AgentClass, Scenario, build_track, classify_agent,
                           parse_tracks, resolve_schema, scene_at,
                           track_future_path, wrap_angle, write_tracks)

from conftest import make_state, scenario_of, straight_track


def test_wrap_angle_range():
    assert wrap_angle(math.pi) == pytest.approx(-math.pi)
    assert wrap_angle(1.5 * math.pi) == pytest.approx(-0.5 * math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(-math.pi)
    assert wrap_angle(0.25) == pytest.approx(0.25)


def test_classify_agent_aliases():
    assert classify_agent("car") is AgentClass.CAR
    assert classify_agent("Truck") is AgentClass.TRUCK_BUS
    assert classify_agent("bicycle") is AgentClass.BICYCLE
    assert classify_agent(None) is AgentClass.CAR
    assert classify_agent("hovercraft") is AgentClass.OTHER
    assert AgentClass.PEDESTRIAN.is_vru and not AgentClass.CAR.is_vru


def test_two_row_parse():
    csv_text = (
        "track_id,t,x,y,length,width,agent_type\n"
        "1,0.0,0,0,4,1.8,car\n"
        "1,0.1,1,0,4,1.8,car\n"
    )
    scenario = parse_tracks(io.StringIO(csv_text), schema="generic")
    assert list(scenario.tracks) == ["1"]
    track = scenario.tracks["1"]
    assert len(track.times) == 2
    assert scenario.dt == pytest.approx(0.1)
    # velocity derived from positions: 1 m over 0.1 s
    assert track.velocities[0] == pytest.approx([10.0, 0.0])
    assert track.speeds[1] == pytest.approx(10.0)


def test_round_trip_identical(crossing_pair):
    buffer = io.StringIO()
    write_tracks(crossing_pair, buffer)
    reparsed = parse_tracks(io.StringIO(buffer.getvalue()), schema="generic")
    assert set(reparsed.tracks) == set(crossing_pair.tracks)
    for tid, track in crossing_pair.tracks.items():
        other = reparsed.tracks[tid]
        np.testing.assert_allclose(other.times, track.times, atol=1e-9)
        np.testing.assert_allclose(other.positions, track.positions, atol=1e-9)
        np.testing.assert_allclose(other.velocities, track.velocities, atol=1e-9)
        np.testing.assert_allclose(other.headings, track.headings, atol=1e-9)
        np.testing.assert_allclose(other.accelerations, track.accelerations,
                                   atol=1e-9)
        assert other.length == track.length and other.width == track.width


def test_derived_kinematics_linear_motion():
    track = straight_track("a", vx=3.0, vy=4.0, duration=1.0)
    np.testing.assert_allclose(track.speeds, 5.0, atol=1e-12)
    np.testing.assert_allclose(track.accelerations, 0.0, atol=1e-9)
    assert track.headings[0] == pytest.approx(math.atan2(4.0, 3.0))


def test_derived_acceleration_braking_ramp():
    dt = 0.1
    times = dt * np.arange(31)
    # linear speed ramp 13.89 -> 7.89 (constant -2 m/s^2 along +x)
    xs = 13.89 * times - 1.0 * times ** 2
    positions = np.stack([xs, np.zeros_like(times)], axis=1)
    track = build_track("a", times, positions)
    # speeds derived from positions are first-order at the window edges
    np.testing.assert_allclose(track.accelerations[2:-2], -2.0, atol=1e-9)
    velocities = np.stack([13.89 - 2.0 * times, np.zeros_like(times)], axis=1)
    exact = build_track("a", times, positions, velocities=velocities)
    np.testing.assert_allclose(exact.accelerations, -2.0, atol=1e-9)


def test_heading_carried_through_standstill():
    times = 0.1 * np.arange(30)
    xs = np.concatenate([np.linspace(0.0, 2.9, 10),
                         np.full(10, 2.9),
                         2.9 + np.linspace(0.0, 2.9, 10)])
    # motion +x, then a standstill, then +x again
    positions = np.stack([xs, np.zeros(30)], axis=1)
    track = build_track("a", times, positions)
    assert track.headings[14] == pytest.approx(0.0, abs=1e-6)


def test_non_increasing_timestamps_rejected():
    times = np.array([0.0, 0.1, 0.1])
    positions = np.zeros((3, 2))
    with pytest.raises(InputError, match="track a.*not strictly increasing"):
        build_track("a", times, positions)


def test_uneven_sampling_rejected():
    times = np.array([0.0, 0.1, 0.35])
    positions = np.zeros((3, 2))
    with pytest.raises(InputError, match="uneven sampling"):
        build_track("a", times, positions)


def test_single_row_without_velocity_rejected():
    with pytest.raises(InputError, match="insufficient states"):
        build_track("a", [0.0], [[0.0, 0.0]])


def test_scenario_mixed_dt_rejected():
    a = straight_track("a", vx=1.0, dt=0.1, duration=1.0)
    b = straight_track("b", vx=1.0, dt=0.04, duration=1.0)
    with pytest.raises(InputError, match="disagree on sampling interval"):
        scenario_of(a, b)


def test_scene_at_snaps_and_rejects(crossing_pair):
    scene = scene_at(crossing_pair, 1.03)
    assert scene.t == pytest.approx(1.0)
    assert {s.agent_id for s in scene.states} == {"a", "b"}
    with pytest.raises(InputError, match="outside recording range"):
        scene_at(crossing_pair, 99.0)
    with pytest.raises(InputError, match="outside recording range"):
        scene_at(crossing_pair, -1.0)


def test_scene_vehicles_excludes_vrus_by_default():
    car = straight_track("car", vx=5.0)
    walker = straight_track("ped", vx=1.0, length=0.5, width=0.5,
                            classification=AgentClass.PEDESTRIAN)
    scenario = scenario_of(car, walker)
    scene = scene_at(scenario, 0.0)
    assert [s.agent_id for s in scene.vehicles()] == ["car"]
    assert {s.agent_id for s in scene.vehicles(include_vrus=True)} == {"car", "ped"}


def test_track_future_path_extends_straight():
    track = straight_track("a", vx=10.0, duration=1.0)
    path = track_future_path(track, 0.5, horizon=3.0)
    # recorded part ends at x=10 (t=1.0); 2.5 uncovered seconds at 10 m/s
    assert path[0][0] == pytest.approx(5.0)
    assert path[-1][0] == pytest.approx(35.0)
    assert path[-1][1] == pytest.approx(0.0)


def test_unknown_schema():
    with pytest.raises(SchemaError, match="unknown schema"):
        resolve_schema("nope")


def test_missing_required_column():
    csv_text = "track_id,t,x,length,width,agent_type\n1,0.0,0,4,1.8,car\n"
    with pytest.raises(SchemaError, match="missing required column.*y"):
        parse_tracks(io.StringIO(csv_text), schema="generic")


def test_invalid_cell_reports_line():
    csv_text = (
        "track_id,t,x,y,length,width,agent_type\n"
        "1,0.0,0,0,4,1.8,car\n"
        "1,0.1,oops,0,4,1.8,car\n"
    )
    with pytest.raises(InputError, match="line 3.*'x'"):
        parse_tracks(io.StringIO(csv_text), schema="generic")


def test_non_finite_cell_rejected():
    csv_text = (
        "track_id,t,x,y,length,width,agent_type\n"
        "1,0.0,nan,0,4,1.8,car\n"
        "1,0.1,1,0,4,1.8,car\n"
    )
    with pytest.raises(InputError, match="non-finite"):
        parse_tracks(io.StringIO(csv_text), schema="generic")


def test_headerless_input_rejected():
    with pytest.raises(SchemaError, match="no header"):
        parse_tracks(io.StringIO(""), schema="generic")


def test_ind_schema_degrees_and_frames():
    csv_text = (
        "trackId,frame,xCenter,yCenter,heading,length,width\n"
        "7,0,0.0,0.0,90.0,4.5,1.9\n"
        "7,1,0.0,0.4,90.0,4.5,1.9\n"
        "7,2,0.0,0.8,90.0,4.5,1.9\n"
    )
    scenario = parse_tracks(io.StringIO(csv_text), schema="ind")
    track = scenario.tracks["7"]
    assert scenario.dt == pytest.approx(0.04)
    assert track.headings[0] == pytest.approx(math.pi / 2)
    assert track.speeds[0] == pytest.approx(10.0)


def test_vru_default_dimensions():
    csv_text = (
        "track_id,t,x,y,length,width,agent_type\n"
        "p,0.0,0,0,,,pedestrian\n"
        "p,0.1,0.1,0,,,pedestrian\n"
    )
    scenario = parse_tracks(io.StringIO(csv_text), schema="generic")
    track = scenario.tracks["p"]
    assert track.classification is AgentClass.PEDESTRIAN
    assert track.length == pytest.approx(0.5)
    assert track.width == pytest.approx(0.5)


def test_duplicate_scene_agents_rejected():
    state = make_state("x")
    from scenefp.scene import Scene
    with pytest.raises(InputError, match="duplicate agent"):
        Scene(t=0.0, states=[state, make_state("x", x=5.0)])


def test_interaction_schema_defaults():
    csv_text = (
        "track_id,frame_id,timestamp_ms,agent_type,x,y,vx,vy,psi_rad,length,width\n"
        "1,1,100,car,0.0,0.0,5.0,0.0,0.0,4.2,1.8\n"
        "1,2,200,car,0.5,0.0,5.0,0.0,0.0,4.2,1.8\n"
    )
    scenario = parse_tracks(io.StringIO(csv_text))
    track = scenario.tracks["1"]
    assert track.times[0] == pytest.approx(0.1)
    assert scenario.dt == pytest.approx(0.1)
    assert track.velocities[0] == pytest.approx([5.0, 0.0])
