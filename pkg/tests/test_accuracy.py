import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gearflank.accuracy import (
    ToothSet,
    ball_positions,
    chordal_thickness,
    deviation_report,
    form_deviations,
    pitch_deviations,
    runout_Fr,
    thickness_variation_Rs,
)
from gearflank.errors import EmptyWindowError, ProbeFitError
from gearflank.geometry import GearSpec, involute_function

GEAR = GearSpec(1.814, 86)
ZERO = 1e-6  # um; rounding floor for "exactly zero" on a 156 mm wheel


def brute_force_ball_radius(ts: ToothSet, gap: int, rho: float) -> float:
    """Radius about the axis of a ball wedged in a gap, by direct distance search.

    The ball slides along the gap bisector in the wheel frame until its distance
    to the densely sampled flank points equals its radius.
    """
    g = ts.gear
    rb = g.base_radius
    r = np.linspace(rb * (1 + 1e-9), g.tip_radius, 40000)
    inv = np.tan(np.arccos(rb / r)) - np.arccos(rb / r)
    z = ts.tooth_count
    tr = ts.beta_right[gap] - inv
    tl = ts.beta_left[(gap + 1) % z] + (2 * math.pi if gap + 1 == z else 0.0) + inv
    pts = np.concatenate([np.column_stack([r * np.cos(tr), r * np.sin(tr)]), np.column_stack([r * np.cos(tl), r * np.sin(tl)])])
    mid = 0.5 * (ts.beta_right[gap] + ts.beta_left[(gap + 1) % z] + (2 * math.pi if gap + 1 == z else 0.0))
    u = np.array([math.cos(mid), math.sin(mid)])

    def clearance(rc):
        return np.min(np.hypot(*(pts - rc * u).T)) - rho

    lo, hi = rb, g.tip_radius + rho
    for _ in range(80):  # larger radius -> more clearance
        m = 0.5 * (lo + hi)
        if clearance(m) < 0:
            lo = m
        else:
            hi = m
    c = 0.5 * (lo + hi) * u + np.asarray(ts.eccentricity)
    return float(np.hypot(*c))


def test_nominal_wheel_all_zero():
    rep = deviation_report(ToothSet.nominal(GEAR))
    for side in ("left", "right"):
        assert rep.f_pt[side] < ZERO and rep.F_p[side] < ZERO
    assert rep.F_r < ZERO and rep.R_s < ZERO
    assert form_deviations(np.zeros((50, 40)))["F_alpha"] == 0.0


def test_eccentricity_runout():
    ts = ToothSet.nominal(GEAR, eccentricity=(0.020, 0.0))
    assert runout_Fr(ts) == pytest.approx(40.0, rel=0.02)


def test_ball_position_matches_brute_force():
    ts = ToothSet.nominal(GEAR, eccentricity=(0.012, -0.009))
    rho = 0.5 * 1.75 * GEAR.module_mn
    c = ball_positions(ts)
    for gap in (0, 17, 85):
        assert np.hypot(*c[gap]) == pytest.approx(brute_force_ball_radius(ts, gap, rho), abs=2e-5)


def test_deep_gap_runout_against_oracle():
    right = np.zeros(86)
    left = np.zeros(86)
    right[10] = -15.0  # both flanks of gap 10 cut back by 15 um along the reference circle
    left[11] = 15.0
    ts = ToothSet.from_flank_offsets(GEAR, left, right)
    rho = 0.5 * 1.75 * GEAR.module_mn
    expected = 1000 * (brute_force_ball_radius(ts, 0, rho) - brute_force_ball_radius(ts, 10, rho))
    assert runout_Fr(ts) == pytest.approx(expected, rel=0.01)
    # contact factor: arc shift s opens the gap by 2s; the ball drops by s / sin of the pressure angle at contact
    assert 15.0 < runout_Fr(ts) < 60.0


def test_probe_must_fit():
    with pytest.raises(ProbeFitError):
        runout_Fr(ToothSet.nominal(GEAR), probe_diameter=0.05)
    with pytest.raises(ProbeFitError):
        runout_Fr(ToothSet.nominal(GEAR), probe_diameter=20.0)


def test_single_tooth_offset():
    off = np.zeros(86)
    off[5] = 10.0
    p = pitch_deviations(ToothSet.from_flank_offsets(GEAR, off, off), "left")
    assert p["f_pt"] == pytest.approx(10.0, abs=1e-6)
    assert p["F_p"] == pytest.approx(10.0, abs=1e-6)


def test_sinusoidal_pitch_error():
    a = 4.0
    off = a * np.sin(2 * np.pi * np.arange(86) / 86)
    p = pitch_deviations(ToothSet.from_flank_offsets(GEAR, off, off))
    assert p["F_p"] == pytest.approx(2 * a, rel=0.02)
    assert p["f_pt"] == pytest.approx(a * 2 * math.sin(math.pi / 86), rel=0.02)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=12, max_size=12))
def test_injected_pitch_pattern_recovered(pattern):
    gear = GearSpec(2.0, 12)
    off = np.asarray(pattern)
    p = pitch_deviations(ToothSet.from_flank_offsets(gear, off, off), "right")
    expected = np.roll(off, -1) - off  # each pitch lengthens by the next tooth's shift minus this one's
    assert np.allclose(p["single"], expected, atol=1e-6)
    cum = np.concatenate([[0.0], np.cumsum(expected[:-1])])
    assert p["F_p"] == pytest.approx(np.ptp(cum), abs=1e-6)
    assert p["F_p"] == pytest.approx(max(cum) - min(cum), abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.floats(-math.pi, math.pi), st.integers(0, 2**31))
def test_rotation_invariance(angle, seed):
    rng = np.random.default_rng(seed)
    ts = ToothSet.from_flank_offsets(GEAR, rng.normal(0, 5, 86), rng.normal(0, 5, 86), eccentricity=(0.01, 0.0))
    a = deviation_report(ts)
    rot = ToothSet.from_flank_offsets(GEAR, np.zeros(86), np.zeros(86)).rotated(angle)
    rot.beta_left = ts.beta_left + angle
    rot.beta_right = ts.beta_right + angle
    c, s = math.cos(angle), math.sin(angle)
    rot.eccentricity = (0.01 * c, 0.01 * s)
    b = deviation_report(rot)
    assert b.F_r == pytest.approx(a.F_r, abs=1e-6)
    assert b.R_s == pytest.approx(a.R_s, abs=1e-6)
    for side in ("left", "right"):
        assert b.f_pt[side] == pytest.approx(a.f_pt[side], abs=1e-6)
        assert b.F_p[side] == pytest.approx(a.F_p[side], abs=1e-6)


def test_thickness_variation():
    th = np.zeros(86)
    th[3] = 12.0
    assert thickness_variation_Rs(ToothSet.from_flank_offsets(GEAR, th / 2, -th / 2)) == pytest.approx(12.0, rel=0.01)
    uniform = np.full(86, 7.0)
    assert thickness_variation_Rs(ToothSet.from_flank_offsets(GEAR, uniform / 2, -uniform / 2)) < ZERO


def test_nominal_chordal_thickness():
    s = chordal_thickness(ToothSet.nominal(GEAR))
    psi = math.pi / 86
    assert s[0] == pytest.approx(2 * GEAR.pitch_radius * math.sin(psi / 2), rel=1e-12)


def test_form_deviation_sine():
    u = np.linspace(0, 1, 401)
    d = 5.0 * np.sin(2 * np.pi * 3 * u)[:, None] * np.ones((1, 21))
    f = form_deviations(d)
    assert f["F_alpha"] == pytest.approx(10.0, rel=0.01)
    assert f["F_beta"] == pytest.approx(0.0, abs=1e-12)


def test_form_deviation_empty_window():
    with pytest.raises(EmptyWindowError):
        form_deviations(np.zeros((10, 10)), eval_range=(0.5, 0.52))


def test_missing_teeth_rejected():
    left, right = ToothSet.nominal_angles(GEAR)
    with pytest.raises(ValueError):
        ToothSet(GEAR, left[:-1], right[:-1])
    right = right.copy()
    right[4] = np.nan
    with pytest.raises(ValueError):
        ToothSet(GEAR, left, right)


def test_fellows_grid_helix_zero():
    from gearflank.generation import GenerationParams, simulate_fellows
    from gearflank.geometry import ShaperSpec

    gear = GearSpec(1.814, 49, face_width=2.0)
    grid = simulate_fellows(gear, ShaperSpec(56, 55), GenerationParams(grid_nu=60, grid_nv=20))
    assert form_deviations(grid)["F_beta"] == 0.0


def test_involute_convention():
    # nominal space width at the reference circle equals tooth thickness
    left, right = ToothSet.nominal_angles(GEAR)
    inv = involute_function(GEAR.alpha)
    tooth = (right[0] - inv) - (left[0] + inv)
    space = (left[1] + inv) - (right[0] - inv)
    assert tooth == pytest.approx(space, rel=1e-12)
