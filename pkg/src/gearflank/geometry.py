"""Nominal spur-gear and tool geometry, plus the closed-form hobbing mark estimates.

Public angles are in degrees, lengths in millimetres unless a name says otherwise
(``*_um``). Internally everything is radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidFeedError, InvalidGeometryError

Side = Literal["drive", "non-drive"]

DEFAULT_PRESSURE_ANGLE = 20.0
RACK_ADDENDUM = 1.25  # x mn, depth of the tool tip below the pitch line
RACK_DEDENDUM = 1.25  # x mn, tool flank length above the pitch line
TIP_ROUNDING = 0.38  # x mn
PROTUBERANCE = 0.02  # x mn, undercut depth; no dimension is published


@dataclass(frozen=True)
class GearSpec:
    module_mn: float
    tooth_count_z2: int
    pressure_angle_an: float = DEFAULT_PRESSURE_ANGLE
    pitch_diameter_dt: float | None = None
    face_width: float = 5.0
    tip_diameter: float | None = None
    root_diameter: float | None = None

    def __post_init__(self):
        mn, z = self.module_mn, self.tooth_count_z2
        if not mn > 0:
            raise InvalidGeometryError(f"module must be positive, got {mn}")
        if int(z) != z or z < 4:
            raise InvalidGeometryError(f"tooth count must be an integer >= 4, got {z}")
        if not 0.0 < self.pressure_angle_an < 45.0:
            raise InvalidGeometryError(f"pressure angle must be in (0, 45) deg, got {self.pressure_angle_an}")
        dt = mn * z
        if self.pitch_diameter_dt is None:
            object.__setattr__(self, "pitch_diameter_dt", dt)
        elif abs(self.pitch_diameter_dt - dt) > 1e-9:
            raise InvalidGeometryError(
                f"pitch diameter {self.pitch_diameter_dt} != module * teeth = {dt}"
            )
        if self.tip_diameter is None:
            object.__setattr__(self, "tip_diameter", dt + 2.0 * mn)
        if self.root_diameter is None:
            object.__setattr__(self, "root_diameter", dt - 2.0 * RACK_ADDENDUM * mn)
        if not self.root_diameter < self.pitch_diameter_dt < self.tip_diameter:
            raise InvalidGeometryError("need root diameter < pitch diameter < tip diameter")
        if not self.face_width > 0:
            raise InvalidGeometryError("face width must be positive")

    @property
    def alpha(self) -> float:
        return math.radians(self.pressure_angle_an)

    @property
    def pitch_radius(self) -> float:
        return 0.5 * self.pitch_diameter_dt

    @property
    def base_radius(self) -> float:
        return self.pitch_radius * math.cos(self.alpha)

    @property
    def tip_radius(self) -> float:
        return 0.5 * self.tip_diameter

    @property
    def pitch_angle(self) -> float:
        """Angular pitch in degrees."""
        return 360.0 / self.tooth_count_z2

    @property
    def tip_roll(self) -> float:
        return roll_angle_at_radius(self.base_radius, self.tip_radius)


@dataclass(frozen=True)
class HobSpec:
    pitch_diameter_d0: float
    flute_count_ni: int
    coil_count_z1: int = 1
    axial_feed_fa: float = 0.0
    tip_rounding: float | None = None
    protuberance_enabled: bool = False

    def __post_init__(self):
        if not self.pitch_diameter_d0 > 0:
            raise InvalidGeometryError("hob diameter must be positive")
        if self.flute_count_ni < 1 or self.coil_count_z1 < 1:
            raise InvalidGeometryError("hob needs at least one flute and one start")
        if not 0.0 <= self.axial_feed_fa < self.pitch_diameter_d0:
            raise InvalidFeedError(
                f"axial feed must satisfy 0 <= fa < d0, got fa={self.axial_feed_fa}"
            )
        if self.tip_rounding is not None and self.tip_rounding < 0:
            raise InvalidGeometryError("tip rounding must be non-negative")


@dataclass(frozen=True)
class ShaperSpec:
    tooth_count_z0: int
    double_strokes_per_pitch: int
    rotary_feed: float = 0.0

    def __post_init__(self):
        if self.tooth_count_z0 < 4:
            raise InvalidGeometryError("cutter needs at least 4 teeth")
        if self.double_strokes_per_pitch < 1:
            raise InvalidGeometryError("need at least one double stroke per pitch")


ToolSpec = Union[HobSpec, ShaperSpec]


@dataclass(frozen=True)
class ToolFlankCurve:
    """Cutting edge of one tool flank in the tool's transverse frame (mm).

    For a rack the frame has x along the pitch line and y pointing into the
    gear blank (depth); ``points`` holds only the straight flank and
    ``tip_points`` the rounding arc. For a pinion cutter the frame is centred
    on the cutter axis and ``points`` samples the involute.
    """

    points: np.ndarray
    side: Side
    kind: Literal["rack", "involute"]
    tip_points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    base_radius: float | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise InvalidGeometryError("tool flank needs at least two planar points")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class KinematicDeviationEstimate:
    delta_x: float  # um
    delta_y: float  # um
    valley_spacing: float  # mm


def involute_function(alpha: float) -> float:
    """inv(a) = tan(a) - a, radians."""
    return math.tan(alpha) - alpha


def inverse_involute(value: float) -> float:
    if value < 0:
        raise InvalidGeometryError("involute function is non-negative")
    if value == 0:
        return 0.0
    return brentq(lambda a: involute_function(a) - value, 0.0, math.pi / 2 - 1e-12, xtol=1e-15)


def involute_point(base_radius: float, roll_angle: float) -> np.ndarray:
    """Point of the involute unwound counter-clockwise from (rb, 0)."""
    if not base_radius > 0:
        raise InvalidGeometryError(f"base radius must be positive, got {base_radius}")
    if roll_angle < 0:
        raise InvalidGeometryError("roll angle must be non-negative")
    c, s = math.cos(roll_angle), math.sin(roll_angle)
    return base_radius * np.array([c + roll_angle * s, s - roll_angle * c])


def involute_points(base_radius: float, roll: np.ndarray) -> np.ndarray:
    roll = np.asarray(roll, dtype=float)
    c, s = np.cos(roll), np.sin(roll)
    return base_radius * np.stack([c + roll * s, s - roll * c], axis=-1)


def roll_angle_at_radius(base_radius: float, radius: float) -> float:
    if radius < base_radius:
        raise InvalidGeometryError(f"radius {radius} lies inside the base circle {base_radius}")
    return math.sqrt((radius / base_radius) ** 2 - 1.0)


def tool_flank(tool: ToolSpec, gear: GearSpec, side: Side = "drive", n: int = 200) -> ToolFlankCurve:
    if isinstance(tool, HobSpec):
        return _rack_flank(tool, gear, side, n)
    if isinstance(tool, ShaperSpec):
        return _cutter_flank(tool, gear, side, n)
    raise TypeError(f"unsupported tool {tool!r}")


def rack_linear_depth(gear: GearSpec, hob: HobSpec) -> float:
    """Depth below the pitch line (mm) where the straight rack flank ends."""
    mn, a = gear.module_mn, gear.alpha
    rho = TIP_ROUNDING * mn if hob.tip_rounding is None else hob.tip_rounding
    return RACK_ADDENDUM * mn - rho * (1.0 - math.sin(a))


def _rack_flank(hob: HobSpec, gear: GearSpec, side: Side, n: int) -> ToolFlankCurve:
    mn, a = gear.module_mn, gear.alpha
    half = math.pi * mn / 4.0
    rho = TIP_ROUNDING * mn if hob.tip_rounding is None else hob.tip_rounding
    y_lin = rack_linear_depth(gear, hob)
    y = np.linspace(-RACK_DEDENDUM * mn, y_lin, n)
    flank = np.column_stack([half - y * math.tan(a), y])

    yc = RACK_ADDENDUM * mn - rho
    xc = (half * math.cos(a) - rho - yc * math.sin(a)) / math.cos(a)
    theta = np.linspace(a, math.pi / 2, max(n // 4, 2))
    arc = np.column_stack([xc + rho * np.cos(theta), yc + rho * np.sin(theta)])
    if hob.protuberance_enabled:
        arc[:, 0] += PROTUBERANCE * mn * np.linspace(1.0, 0.0, len(arc))

    if side == "non-drive":
        flank = flank * [-1.0, 1.0]
        arc = arc * [-1.0, 1.0]
    return ToolFlankCurve(flank, side, "rack", tip_points=arc)


def cutter_radii(shaper: ShaperSpec, gear: GearSpec) -> tuple[float, float, float]:
    """(pitch, base, tip) radii of the pinion cutter in mm."""
    rp0 = 0.5 * shaper.tooth_count_z0 * gear.module_mn
    return rp0, rp0 * math.cos(gear.alpha), rp0 + RACK_ADDENDUM * gear.module_mn


def _cutter_flank(shaper: ShaperSpec, gear: GearSpec, side: Side, n: int) -> ToolFlankCurve:
    _, rb0, ra0 = cutter_radii(shaper, gear)
    roll = np.linspace(0.0, roll_angle_at_radius(rb0, ra0), n)
    pts = involute_points(rb0, roll)
    if side == "non-drive":
        pts = pts * [1.0, -1.0]
    return ToolFlankCurve(pts, side, "involute", base_radius=rb0)


def helix_feed_deviation(pressure_angle: float, d0: float, fa: float) -> float:
    """Height (um) of the axial feed marks a hob of pitch diameter d0 leaves at feed fa."""
    if not 0.0 <= fa < d0:
        raise InvalidFeedError(f"feed must satisfy 0 <= fa < d0, got fa={fa}, d0={d0}")
    # d0/2 - sqrt(d0^2 - fa^2)/2 written without cancellation
    sagitta = fa * fa / (2.0 * (d0 + math.sqrt(d0 * d0 - fa * fa)))
    return 1000.0 * math.tan(math.radians(pressure_angle)) * sagitta


def profile_scallop_deviation(z1: int, mn: float, pressure_angle: float, z2: int, ni: int) -> float:
    """Height (um) of the generating scallops along the profile of a hobbed gear."""
    if z2 <= 0 or ni <= 0:
        raise InvalidGeometryError("tooth count and flute count must be positive")
    if z1 <= 0 or mn <= 0:
        raise InvalidGeometryError("starts and module must be positive")
    a = math.radians(pressure_angle)
    return 1000.0 * math.pi**2 * z1**2 * mn * math.sin(a) / (4.0 * z2 * ni**2)


def tangent_shift(dt: float, phi: float) -> float:
    """Tool shift (mm) matching a wheel turn of phi degrees on rolling diameter dt."""
    if not dt > 0:
        raise InvalidGeometryError("rolling diameter must be positive")
    return math.pi * dt * phi / 360.0


def kinematic_deviation_estimate(gear: GearSpec, hob: HobSpec) -> KinematicDeviationEstimate:
    return KinematicDeviationEstimate(
        delta_x=helix_feed_deviation(gear.pressure_angle_an, hob.pitch_diameter_d0, hob.axial_feed_fa),
        delta_y=profile_scallop_deviation(
            hob.coil_count_z1, gear.module_mn, gear.pressure_angle_an, gear.tooth_count_z2, hob.flute_count_ni
        ),
        valley_spacing=hob.axial_feed_fa,
    )
