import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gearflank.errors import InvalidFeedError, InvalidGeometryError
from gearflank.geometry import (
    GearSpec,
    HobSpec,
    ShaperSpec,
    helix_feed_deviation,
    involute_function,
    involute_point,
    inverse_involute,
    kinematic_deviation_estimate,
    profile_scallop_deviation,
    tangent_shift,
    tool_flank,
)

GEAR = GearSpec(1.814, 86)
HOB = HobSpec(70.0, 14, 1, 2.0)


def test_involute_starts_on_base_circle():
    assert np.linalg.norm(involute_point(10.0, 0.0)) == pytest.approx(10.0, abs=1e-12)


def test_involute_radius_closed_form():
    assert np.linalg.norm(involute_point(10.0, 1.0)) == pytest.approx(14.1421, abs=1e-4)


@given(st.floats(0.1, 500.0), st.floats(0.0, 3.0))
def test_involute_radius_relation(rb, xi):
    assert np.linalg.norm(involute_point(rb, xi)) == pytest.approx(rb * math.sqrt(1 + xi * xi), rel=1e-12)


def test_involute_function_value():
    assert involute_function(math.radians(20.0)) == pytest.approx(0.014904, abs=5e-7)


@given(st.floats(0.01, 1.2))
def test_inverse_involute_roundtrip(a):
    assert inverse_involute(involute_function(a)) == pytest.approx(a, rel=1e-9)


def test_involute_rejects_bad_base_radius():
    with pytest.raises(InvalidGeometryError):
        involute_point(0.0, 0.5)
    with pytest.raises(InvalidGeometryError):
        involute_point(-1.0, 0.5)


def test_gear_defaults_and_invariants():
    assert GEAR.pitch_diameter_dt == pytest.approx(156.004, abs=1e-9)
    assert GEAR.root_diameter < GEAR.pitch_diameter_dt < GEAR.tip_diameter
    assert GEAR.pressure_angle_an == 20.0
    with pytest.raises(InvalidGeometryError):
        GearSpec(1.814, 86, pitch_diameter_dt=156.0297)
    with pytest.raises(InvalidGeometryError):
        GearSpec(1.0, 3)
    with pytest.raises(InvalidGeometryError):
        GearSpec(1.0, 20, pressure_angle_an=45.0)
    with pytest.raises(InvalidGeometryError):
        GearSpec(1.0, 20, tip_diameter=19.0)


def test_tool_spec_invariants():
    with pytest.raises(InvalidFeedError):
        HobSpec(70.0, 14, 1, 70.0)
    with pytest.raises(InvalidGeometryError):
        HobSpec(70.0, 0)
    with pytest.raises(InvalidGeometryError):
        ShaperSpec(3, 55)
    with pytest.raises(InvalidGeometryError):
        ShaperSpec(56, 0)


def test_rack_flank_collinear_at_pressure_angle():
    c = tool_flank(HOB, GEAR)
    assert c.kind == "rack"
    d = c.points - c.points[0]
    cross = d[:, 0] * d[-1, 1] - d[:, 1] * d[-1, 0]
    assert np.max(np.abs(cross)) < 1e-12
    # angle between the flank and the rack normal (depth axis y)
    angle = math.degrees(math.atan2(abs(d[-1, 0]), abs(d[-1, 1])))
    assert angle == pytest.approx(20.0, abs=1e-9)


def test_rack_sides_mirror():
    a = tool_flank(HOB, GEAR, "drive")
    b = tool_flank(HOB, GEAR, "non-drive")
    assert np.array_equal(a.points * [-1.0, 1.0], b.points)
    assert np.array_equal(a.tip_points * [-1.0, 1.0], b.tip_points)


def test_protuberance_changes_only_tip():
    plain = tool_flank(HOB, GEAR)
    prot = tool_flank(HobSpec(70.0, 14, 1, 2.0, protuberance_enabled=True), GEAR)
    assert np.array_equal(plain.points, prot.points)
    assert not np.array_equal(plain.tip_points, prot.tip_points)


def test_shaper_flank_on_cutter_involute():
    c = tool_flank(ShaperSpec(56, 55), GEAR)
    rb0 = 0.5 * 56 * 1.814 * math.cos(math.radians(20.0))
    assert rb0 == pytest.approx(47.72, abs=0.01)  # 47.7289 exactly
    assert c.base_radius == pytest.approx(rb0, rel=1e-12)
    r = np.hypot(c.points[:, 0], c.points[:, 1])
    roll = np.sqrt(np.maximum((r / rb0) ** 2 - 1, 0))
    expected = rb0 * np.column_stack([np.cos(roll) + roll * np.sin(roll), np.sin(roll) - roll * np.cos(roll)])
    assert np.max(np.hypot(*(c.points - expected).T)) < 1e-6
    assert np.all(np.diff(r) > 0)


def test_helix_feed_deviation_values():
    assert helix_feed_deviation(20.0, 70.0, 0.0) == 0.0
    assert helix_feed_deviation(20.0, 70.0, 2.0) == pytest.approx(5.20, abs=0.005)
    with pytest.raises(InvalidFeedError):
        helix_feed_deviation(20.0, 70.0, 70.0)


def test_helix_feed_deviation_matches_direct_formula():
    a, d0, fa = math.radians(20.0), 70.0, 2.0
    direct = 1000 * math.tan(a) * (d0 / 2 - math.sqrt((d0 * d0 - fa * fa) / 4))
    assert helix_feed_deviation(20.0, d0, fa) == pytest.approx(direct, rel=1e-9)


@given(st.floats(1.0, 300.0), st.floats(0.0, 0.05))
def test_helix_small_feed_expansion(d0, ratio):
    fa = ratio * d0
    approx = 1000 * math.tan(math.radians(20.0)) * fa * fa / (4 * d0)
    assert helix_feed_deviation(20.0, d0, fa) == pytest.approx(approx, rel=0.01, abs=1e-300)


def test_profile_scallop_values():
    assert profile_scallop_deviation(1, 1.814, 20.0, 86, 14) == pytest.approx(0.0908, abs=5e-5)
    assert profile_scallop_deviation(2, 1.814, 20.0, 86, 14) == pytest.approx(0.363, abs=5e-4)
    assert profile_scallop_deviation(1, 1.814, 0.0, 86, 14) == 0.0
    with pytest.raises(InvalidGeometryError):
        profile_scallop_deviation(1, 1.814, 20.0, 0, 14)
    with pytest.raises(InvalidGeometryError):
        profile_scallop_deviation(1, 1.814, 20.0, 86, 0)


@given(st.integers(1, 4), st.floats(0.5, 10.0), st.floats(1.0, 40.0), st.integers(4, 200), st.integers(1, 40))
def test_profile_scallop_flute_scaling(z1, mn, an, z2, ni):
    assert profile_scallop_deviation(z1, mn, an, z2, 2 * ni) == profile_scallop_deviation(z1, mn, an, z2, ni) / 4


def test_tangent_shift_values():
    assert tangent_shift(156.0297, 0.0) == 0.0
    assert tangent_shift(156.0297, 0.299) == pytest.approx(math.pi * 156.0297 * 0.299 / 360, rel=1e-15)
    assert tangent_shift(156.0297, 0.299) == pytest.approx(0.40713, abs=1e-5)
    assert tangent_shift(156.0297, 360.0) == pytest.approx(math.pi * 156.0297, rel=1e-15)


@given(st.floats(1.0, 1000.0), st.floats(-360, 360), st.floats(-360, 360))
def test_tangent_shift_linear(dt, a, b):
    assert tangent_shift(dt, a + b) == pytest.approx(tangent_shift(dt, a) + tangent_shift(dt, b), rel=1e-12, abs=1e-9)


def test_kinematic_estimate():
    est = kinematic_deviation_estimate(GEAR, HOB)
    assert est.valley_spacing == 2.0
    assert est.delta_x == pytest.approx(5.20, abs=0.005)
    assert est.delta_y == pytest.approx(0.0908, abs=5e-5)
