"""Discrete-envelope simulation of hobbing and Fellows shaping.

Every tool stroke leaves a cut surface; the generated flank is the minimum over
all strokes of the residual material (tool clearance) measured along the normal
of the nominal involute. The flank is sampled on a (u, v) grid where u is the
involute arc length measured from the base circle and v the axial position.

Hobbing uses a separable model: the in-plane gap between the nominal involute
and the straight rack flank of the stroke, plus the hob-cylinder sagitta at the
axial offset from the stroke's feed row, projected on the flank normal by
tan(alpha). Shaping strokes run the full face width, so the gap has no v term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import EmptyEnvelopeError, InvalidParamsError
from .geometry import (
    RACK_DEDENDUM,
    GearSpec,
    HobSpec,
    ShaperSpec,
    ToolFlankCurve,
    ToolSpec,
    cutter_radii,
    rack_linear_depth,
    tangent_shift,
    tool_flank,
)
from .profile import Profile

_REACH_TOL = 1e-9  # mm


@dataclass(frozen=True)
class GenerationParams:
    wheel_step_dphi: float | None = None  # deg per stroke; None derives it from the tool
    grid_nu: int = 500
    grid_nv: int = 500
    passes_margin: int = 2

    def __post_init__(self):
        if self.wheel_step_dphi is not None and not self.wheel_step_dphi > 0:
            raise InvalidParamsError(f"wheel step must be positive, got {self.wheel_step_dphi}")
        if self.grid_nu < 16 or self.grid_nv < 16:
            raise InvalidParamsError("grid needs at least 16 samples per direction")
        if self.passes_margin < 0:
            raise InvalidParamsError("passes margin must be non-negative")


@dataclass(frozen=True)
class GenerationPass:
    index: int
    wheel_angle: float  # deg
    tool_shift: float  # mm
    axial_center: float  # mm
    tool_angle: float = 0.0  # deg, shaping only
    stroke: int = 0  # generating position within the tooth space
    roll: float = 0.0  # involute roll angle (rad) of the generating contact


@dataclass
class FlankGrid:
    """Residual material above the nominal involute flank, in um.

    ``deviations[i, j]`` belongs to profile sample ``u_axis[i]`` and axial
    sample ``v_axis[j]``.
    """

    deviations: np.ndarray
    u_axis: np.ndarray  # um of involute arc length
    v_axis: np.ndarray  # um
    side: str
    gear: GearSpec
    roll: np.ndarray | None = None
    winner: np.ndarray | None = None  # index into ``passes`` of the deepest cut per cell
    passes: list[GenerationPass] = field(default_factory=list)
    method: str = ""

    @property
    def du(self) -> float:
        return float(self.u_axis[1] - self.u_axis[0])

    @property
    def dv(self) -> float:
        return float(self.v_axis[1] - self.v_axis[0])

    @property
    def shape(self):
        return self.deviations.shape


def default_wheel_step(gear: GearSpec, tool: ToolSpec) -> float:
    """Wheel rotation per stroke (deg)."""
    if isinstance(tool, HobSpec):
        return gear.pitch_angle * tool.coil_count_z1 / tool.flute_count_ni
    return gear.pitch_angle / tool.double_strokes_per_pitch


class _Kinematics:
    """Gear-frame geometry shared by cut_depth and the vectorised envelope."""

    def __init__(self, gear: GearSpec, tool: ToolSpec, side="drive"):
        self.gear = gear
        self.tool = tool
        self.curve: ToolFlankCurve = tool_flank(tool, gear, side)
        self.rb = gear.base_radius
        self.rp = gear.pitch_radius
        self.alpha = gear.alpha
        self.roll_ref = math.tan(self.alpha)  # roll at the pitch point
        if isinstance(tool, HobSpec):
            self.depth_lo = -RACK_DEDENDUM * gear.module_mn
            self.depth_hi = rack_linear_depth(gear, tool)
            self.roll_lo = self.roll_ref - self.depth_hi / (self.rb * math.sin(self.alpha))
        else:
            rp0, rb0, ra0 = cutter_radii(tool, gear)
            self.rp0, self.rb0, self.ra0 = rp0, rb0, ra0
            self.eta_tip = math.sqrt((ra0 / rb0) ** 2 - 1.0)
            reach = (self.rb + rb0) * math.tan(self.alpha) - rb0 * self.eta_tip
            self.roll_lo = reach / self.rb
        self.roll_lo = max(self.roll_lo, 1e-6)
        self.roll_hi = gear.tip_roll
        if self.roll_lo >= self.roll_hi:
            raise InvalidParamsError("tool cannot reach the involute flank of this gear")

    # in-plane gaps, mm; rolls broadcast against each other
    def rack_gap(self, roll, roll_k):
        d = roll_k - roll
        # d - sin d loses everything to cancellation for tiny d
        small = np.abs(d) < 1e-2
        d2 = d * d
        d_sin = np.where(small, d * d2 / 6.0 * (1.0 - d2 / 20.0 * (1.0 - d2 / 42.0)), d - np.sin(d))
        gap = self.rb * (roll * 2.0 * np.sin(0.5 * d) ** 2 + d_sin)
        # depth of the foot point below the rack pitch line of the stroke
        c, s = np.cos(roll), np.sin(roll)
        px = self.rb * (c + roll * s)
        py = self.rb * (s - roll * c)
        ck, sk = np.cos(roll_k), np.sin(roll_k)
        fx = px + gap * sk
        fy = py - gap * ck
        t = math.tan(self.alpha)
        pix = self.rb * (ck + t * sk)
        piy = self.rb * (sk - t * ck)
        depth = self.rp - (fx * pix + fy * piy) / self.rp
        reach = (depth >= self.depth_lo - _REACH_TOL) & (depth <= self.depth_hi + _REACH_TOL)
        return np.where(reach, gap, np.inf)

    def cutter_gap(self, roll, roll_k):
        rb, rb0, t = self.rb, self.rb0, math.tan(self.alpha)
        roll, roll_k = np.broadcast_arrays(np.asarray(roll, float), np.asarray(roll_k, float))
        ck, sk = np.cos(roll_k), np.sin(roll_k)
        nkx, nky = sk, -ck
        # cutter centre and its base-circle tangent point on the line of action
        pix = rb * ck + rb * t * nkx
        piy = rb * sk + rb * t * nky
        scale = (self.rp + self.rp0) / self.rp
        cx, cy = pix * scale, piy * scale
        t0x = pix + rb0 * t * nkx
        t0y = piy + rb0 * t * nky
        tau0 = np.arctan2(t0y - cy, t0x - cx)
        eta_k = ((rb + rb0) * t - rb * roll_k) / rb0
        # the cutter involute leaves T0 along -n_k, the clockwise tangent
        beta_k = tau0 - eta_k

        c, s = np.cos(roll), np.sin(roll)
        qx = rb * (c + roll * s) - cx
        qy = rb * (s - roll * c) - cy
        rho = np.hypot(qx, qy)
        theta = np.arctan2(qy, qx)
        ratio = np.clip(rb0 / rho, -1.0, 1.0)
        gamma = np.arccos(ratio)
        inv = np.tan(gamma) - gamma
        beta_q = theta - inv
        diff = np.angle(np.exp(1j * (beta_q - beta_k)))
        gap = -rb0 * diff
        # roll of the foot point on the cutter flank
        eta_q = np.sqrt(np.maximum((rho / rb0) ** 2 - 1.0, 0.0))
        eta_foot = eta_q + diff
        reach = (rho >= rb0) & (eta_foot >= -_REACH_TOL) & (eta_foot <= self.eta_tip + _REACH_TOL)
        return np.where(reach, gap, np.inf)

    def in_plane_gap(self, roll, roll_k):
        if isinstance(self.tool, HobSpec):
            return self.rack_gap(roll, roll_k)
        return self.cutter_gap(roll, roll_k)

    def sagitta(self, w):
        """Hob-cylinder sagitta (mm) at axial offset w (mm); inf outside the hob."""
        r = 0.5 * self.tool.pitch_diameter_d0
        w = np.asarray(w, dtype=float)
        inside = np.abs(w) <= r
        ww = np.where(inside, w, 0.0)
        s = ww * ww / (r + np.sqrt(r * r - ww * ww))
        return np.where(inside, s, np.inf)


def plan_passes(gear: GearSpec, tool: ToolSpec, params: GenerationParams) -> list[GenerationPass]:
    """Ordered tool strokes that can touch the analysed flank, plus margin."""
    kin = _Kinematics(gear, tool)
    return _plan(kin, params)


def _plan(kin: _Kinematics, params: GenerationParams) -> list[GenerationPass]:
    gear, tool = kin.gear, kin.tool
    dphi = params.wheel_step_dphi if params.wheel_step_dphi is not None else default_wheel_step(gear, tool)
    if not dphi > 0:
        raise InvalidParamsError("wheel step must be positive")
    step = math.radians(dphi)
    j_lo = math.floor((kin.roll_lo - kin.roll_ref) / step) - params.passes_margin
    j_hi = math.ceil((kin.roll_hi - kin.roll_ref) / step) + params.passes_margin
    strokes = range(j_lo, j_hi + 1)

    passes: list[GenerationPass] = []
    if isinstance(tool, HobSpec):
        per_pitch = gear.pitch_angle / dphi
        if abs(per_pitch - round(per_pitch)) > 1e-6:
            raise InvalidParamsError(
                f"hobbing wheel step {dphi} deg must divide the pitch angle {gear.pitch_angle} deg"
            )
        fa = tool.axial_feed_fa
        if fa > 0:
            m_lo = -1 - params.passes_margin
            m_hi = math.ceil(gear.face_width / fa) + 1 + params.passes_margin
            revolutions = range(m_lo, m_hi + 1)
        else:
            revolutions = range(0, 1)
        for m in revolutions:
            for j in strokes:
                phi = 360.0 * m + j * dphi
                passes.append(
                    GenerationPass(
                        index=len(passes),
                        wheel_angle=phi,
                        tool_shift=tangent_shift(gear.pitch_diameter_dt, phi),
                        axial_center=fa * phi / 360.0,
                        stroke=j,
                        roll=kin.roll_ref + j * step,
                    )
                )
    else:
        ratio = gear.tooth_count_z2 / tool.tooth_count_z0
        for j in strokes:
            phi = j * dphi
            passes.append(
                GenerationPass(
                    index=len(passes),
                    wheel_angle=phi,
                    tool_shift=tangent_shift(gear.pitch_diameter_dt, phi),
                    axial_center=0.0,
                    tool_angle=phi * ratio,
                    stroke=j,
                    roll=kin.roll_ref + j * step,
                )
            )
    return passes


def cut_depth(pass_: GenerationPass, roll, v, kin: _Kinematics):
    """Residual material (um) left by one stroke at flank point (roll, v mm).

    Returns +inf where the stroke cannot reach the point.
    """
    g = kin.in_plane_gap(roll, pass_.roll)
    if isinstance(kin.tool, HobSpec) and kin.tool.axial_feed_fa > 0:
        g = g + math.tan(kin.alpha) * kin.sagitta(np.asarray(v, float) - pass_.axial_center)
    return 1000.0 * g


def flank_axes(kin: _Kinematics, params: GenerationParams):
    """Uniform (u, v) axes in um and the roll angle of every u sample."""
    rb = kin.rb
    s_lo = 0.5 * rb * kin.roll_lo**2
    s_hi = 0.5 * rb * kin.roll_hi**2
    u = np.linspace(s_lo, s_hi, params.grid_nu)
    roll = np.sqrt(2.0 * u / rb)
    roll[0], roll[-1] = kin.roll_lo, kin.roll_hi
    v = np.linspace(0.0, kin.gear.face_width, params.grid_nv)
    return 1000.0 * u, 1000.0 * v, roll


def _envelope(kin: _Kinematics, params: GenerationParams, passes: Sequence[GenerationPass], method: str, side):
    if not passes:
        raise EmptyEnvelopeError("no tool passes planned")
    u_um, v_um, roll = flank_axes(kin, params)
    v_mm = v_um / 1000.0
    nu, nv = len(u_um), len(v_um)

    strokes = sorted({p.stroke for p in passes})
    col = {j: i for i, j in enumerate(strokes)}
    stroke_roll = {p.stroke: p.roll for p in passes}
    rolls_k = np.array([stroke_roll[j] for j in strokes])
    in_plane = 1000.0 * kin.in_plane_gap(roll[:, None], rolls_k[None, :])  # (nu, J)
    pass_col = np.array([col[p.stroke] for p in passes])

    hob_feed = isinstance(kin.tool, HobSpec) and kin.tool.axial_feed_fa > 0
    if hob_feed:
        centers = np.array([p.axial_center for p in passes])
        axial = 1000.0 * math.tan(kin.alpha) * kin.sagitta(v_mm[:, None] - centers[None, :])  # (nv, K)
        dev = np.empty((nu, nv))
        win = np.empty((nu, nv), dtype=np.int64)
        chunk = max(1, 4_000_000 // (nv * len(passes)))
        for a in range(0, nu, chunk):
            total = in_plane[a : a + chunk, pass_col][:, None, :] + axial[None, :, :]
            idx = np.argmin(total, axis=2)
            win[a : a + chunk] = idx
            dev[a : a + chunk] = np.take_along_axis(total, idx[..., None], axis=2)[..., 0]
    else:
        per_pass = in_plane[:, pass_col]  # (nu, K)
        idx = np.argmin(per_pass, axis=1)
        best = per_pass[np.arange(nu), idx]
        dev = np.repeat(best[:, None], nv, axis=1)
        win = np.repeat(idx[:, None], nv, axis=1)

    uncut = ~np.isfinite(dev)
    if uncut.all():
        raise EmptyEnvelopeError("no pass touches the flank grid")
    if uncut.any():
        rows = np.unique(np.nonzero(uncut)[0])
        raise EmptyEnvelopeError(
            f"{int(uncut.sum())} flank cells never cut (profile rows {rows[:5].tolist()}...); "
            "increase passes_margin"
        )
    return FlankGrid(
        deviations=dev,
        u_axis=u_um,
        v_axis=v_um,
        side=side,
        gear=kin.gear,
        roll=roll,
        winner=win,
        passes=list(passes),
        method=method,
    )


def simulate_hobbing(gear: GearSpec, hob: HobSpec, params: GenerationParams, side="drive", passes=None) -> FlankGrid:
    kin = _Kinematics(gear, hob, side)
    if passes is None:
        passes = _plan(kin, params)
    return _envelope(kin, params, passes, "hob", side)


def simulate_fellows(
    gear: GearSpec, shaper: ShaperSpec, params: GenerationParams, side="drive", passes=None
) -> FlankGrid:
    kin = _Kinematics(gear, shaper, side)
    if passes is None:
        passes = _plan(kin, params)
    return _envelope(kin, params, passes, "fellows", side)


def simulate(gear: GearSpec, tool: ToolSpec, params: GenerationParams, side="drive", passes=None) -> FlankGrid:
    if isinstance(tool, HobSpec):
        return simulate_hobbing(gear, tool, params, side, passes)
    return simulate_fellows(gear, tool, params, side, passes)


def engagement_count(grid: FlankGrid, by: Literal["stroke", "pass"] = "stroke") -> int:
    """Number of generating positions that leave the final surface somewhere on the flank.

    ``by="stroke"`` counts distinct positions within the tooth space (a hob
    stroke repeated on later revolutions counts once); ``by="pass"`` counts
    individual passes.
    """
    if grid.winner is None:
        raise ValueError("grid carries no per-pass contact record")
    used = np.unique(grid.winner)
    if by == "pass":
        return int(used.size)
    return len({grid.passes[i].stroke for i in used})


def extract_profile(grid: FlankGrid, direction: Literal["along-profile", "along-helix"], position: int) -> Profile:
    nu, nv = grid.deviations.shape
    if direction == "along-profile":
        if not 0 <= position < nv:
            raise IndexError(f"axial position {position} outside 0..{nv - 1}")
        return Profile(grid.deviations[:, position].copy(), grid.du)
    if direction == "along-helix":
        if not 0 <= position < nu:
            raise IndexError(f"profile position {position} outside 0..{nu - 1}")
        return Profile(grid.deviations[position, :].copy(), grid.dv)
    raise ValueError(f"unknown direction {direction!r}")


def max_profile_scallop(grid_or_trace) -> float:
    """Largest scallop height along the profile direction, um.

    A scallop is the stretch between two neighbouring local minima of a profile
    trace; its height is the stretch maximum above the mean of the two bounding
    minima, which removes any linear trend across the scallop. Partial scallops
    cut by the trace ends are ignored unless there is no complete one.
    """
    if isinstance(grid_or_trace, FlankGrid):
        columns = grid_or_trace.deviations.T
    else:
        columns = np.atleast_2d(np.asarray(grid_or_trace, float))
    best = partial = 0.0
    for z in columns:
        minima = np.nonzero((z[1:-1] <= z[:-2]) & (z[1:-1] < z[2:]))[0] + 1
        for a, b in zip(minima[:-1], minima[1:]):
            best = max(best, z[a : b + 1].max() - 0.5 * (z[a] + z[b]))
        partial = max(partial, float(z.max() - z.min()))
    return float(best) if best > 0 else partial


def max_helix_range(grid: FlankGrid) -> float:
    """Largest peak-to-valley along v at fixed u, um (the feed-mark height)."""
    d = grid.deviations
    return float((d.max(axis=1) - d.min(axis=1)).max())
