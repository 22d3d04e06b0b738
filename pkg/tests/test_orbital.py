import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from constellation_rl.errors import ConfigurationError
from constellation_rl.orbital import (
    MU_EARTH,
    OrbitalSlot,
    build_constellation_geometry,
    euclidean_distance,
    gravity,
    mean_motion,
    propagate,
    propagation_delay,
    slot_to_cartesian,
)


def test_gps_layout_has_six_planes_of_four():
    slots = build_constellation_geometry(24, 6, math.radians(55), 26560.0)
    assert len(slots) == 24
    raans = sorted({round(s.raan, 12) for s in slots})
    assert len(raans) == 6
    assert np.allclose(np.diff(raans), math.pi / 3)
    for p in range(6):
        phases = sorted(s.phase_angle for s in slots if s.plane_index == p)
        assert np.allclose(np.diff(phases), math.pi / 2)


def test_single_plane_layout():
    slots = build_constellation_geometry(4, 1, 0.0, 7000.0)
    assert all(s.raan == 0 for s in slots)
    assert np.allclose([s.phase_angle for s in slots], [0, math.pi / 2, math.pi, 3 * math.pi / 2])


def test_layout_is_deterministic():
    a = build_constellation_geometry(24, 6, 0.96, 26560.0)
    b = build_constellation_geometry(24, 6, 0.96, 26560.0)
    assert a == b


@pytest.mark.parametrize("n,planes,radius", [(24, 5, 26560.0), (8, 0, 26560.0), (8, 2, 6371.0), (8, 2, 100.0)])
def test_bad_layouts_rejected(n, planes, radius):
    with pytest.raises(ConfigurationError):
        build_constellation_geometry(n, planes, 0.9, radius)


def test_equatorial_slot_at_node():
    pos, vel = slot_to_cartesian(OrbitalSlot(0, 0, 0.0, 0.0, 0.0, 7000.0))
    assert np.allclose(pos, [7000, 0, 0])
    speed = math.sqrt(MU_EARTH / 7000.0)
    assert speed == pytest.approx(7.546, abs=1e-3)
    assert np.allclose(vel, [0, speed, 0])


def test_equatorial_slot_opposite_side():
    pos, _ = slot_to_cartesian(OrbitalSlot(0, 0, 0.0, 0.0, math.pi, 7000.0))
    assert np.allclose(pos, [-7000, 0, 0])


def test_polar_slot_matches_hand_rotation():
    # equatorial point at phase pi/2 is (0, r, 0); tilting the plane by pi/2
    # about x sends it to (0, 0, r)
    pos, _ = slot_to_cartesian(OrbitalSlot(0, 0, math.pi / 2, 0.0, math.pi / 2, 7000.0))
    assert np.max(np.abs(pos - np.array([0.0, 0.0, 7000.0]))) < 1e-6


@settings(max_examples=200, deadline=None)
@given(
    incl=st.floats(0, math.pi),
    raan=st.floats(0, 2 * math.pi),
    phase=st.floats(0, 2 * math.pi),
    radius=st.floats(6400, 50000),
    offset=st.floats(-10, 10),
)
def test_circular_state_invariants(incl, raan, phase, radius, offset):
    pos, vel = slot_to_cartesian(OrbitalSlot(0, 0, incl, raan, phase, radius), offset)
    assert abs(np.linalg.norm(pos) - radius) / radius < 1e-9
    v = math.sqrt(MU_EARTH / radius)
    assert abs(np.linalg.norm(vel) - v) / v < 1e-9
    assert abs(pos @ vel) / (np.linalg.norm(pos) * np.linalg.norm(vel)) < 1e-9


def test_euler_examples():
    p, v = propagate(np.array([1.0, 0, 0]), np.array([2.0, 0, 0]), np.zeros(3), 0.5)
    assert np.array_equal(p, [2, 0, 0]) and np.array_equal(v, [2, 0, 0])
    p, v = propagate(np.zeros(3), np.array([0, 1.0, 0]), np.array([0, 0, 2.0]), 1.0)
    assert np.array_equal(p, [0, 1, 0]) and np.array_equal(v, [0, 1, 2])


@given(st.lists(st.floats(-1e4, 1e4), min_size=9, max_size=9))
def test_zero_step_is_identity(xs):
    p, v, a = (np.array(xs[i : i + 3]) for i in (0, 3, 6))
    p2, v2 = propagate(p, v, a, 0.0)
    assert np.array_equal(p, p2) and np.array_equal(v, v2)


def test_negative_step_rejected():
    with pytest.raises(ValueError):
        propagate(np.zeros(3), np.zeros(3), np.zeros(3), -1.0)


def test_gravity_points_inward():
    g = gravity(np.array([7000.0, 0, 0]))
    assert g[0] == pytest.approx(-MU_EARTH / 7000.0**2)
    assert mean_motion(7000.0) == pytest.approx(math.sqrt(MU_EARTH / 7000.0**3))


@pytest.mark.parametrize(
    "a,b,d", [((0, 0, 0), (3, 4, 0), 5.0), ((1, 1, 1), (1, 1, 1), 0.0), ((1, 2, 3), (4, 6, 3), 5.0)]
)
def test_distance_examples(a, b, d):
    assert euclidean_distance(np.array(a, float), np.array(b, float)) == d


@given(st.lists(st.floats(-1e5, 1e5), min_size=6, max_size=6))
def test_distance_symmetric(xs):
    a, b = np.array(xs[:3]), np.array(xs[3:])
    assert euclidean_distance(a, b) == euclidean_distance(b, a)
    assert euclidean_distance(a, a) == 0


def test_delay_examples():
    assert propagation_delay(0.0) == 0.0
    assert propagation_delay(299792.458) == 1.0
    assert propagation_delay(29979.2458) == pytest.approx(0.1, rel=1e-15)
    with pytest.raises(ValueError):
        propagation_delay(-1.0)
