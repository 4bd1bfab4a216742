"""Gear accuracy deviations: profile/helix form, pitch, runout and tooth thickness.

Each flank is an involute of the base circle described by a start angle. In
the wheel frame, with gamma the pressure angle at radius r, the clockwise
flank of a tooth sits at ``theta = beta_left + inv(gamma)`` and the
counter-clockwise flank at ``theta = beta_right - inv(gamma)``. Flank position
errors are arc lengths (um) at the reference circle, positive counter-clockwise.
An eccentricity vector (mm) displaces the wheel centre from the axis about which
pitch and runout are measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import EmptyWindowError, ProbeFitError
from .geometry import GearSpec, involute_function, inverse_involute

DEFAULT_EVAL_RANGE = (0.05, 0.95)
DEFAULT_PROBE_FACTOR = 1.75  # x mn


def _inv_of_radius(rb: float, r: float) -> float:
    return involute_function(math.acos(rb / r))


@dataclass
class ToothSet:
    gear: GearSpec
    beta_left: np.ndarray  # rad, one per tooth
    beta_right: np.ndarray
    eccentricity: tuple[float, float] = (0.0, 0.0)  # mm
    reference_radius: float | None = None  # mm, pitch radius by default
    flanks: list | None = field(default=None, repr=False)  # per tooth (left, right) deviation grids in um

    def __post_init__(self):
        self.beta_left = np.asarray(self.beta_left, float)
        self.beta_right = np.asarray(self.beta_right, float)
        z = self.gear.tooth_count_z2
        if self.beta_left.shape != (z,) or self.beta_right.shape != (z,):
            raise ValueError(f"need one left and one right flank per tooth ({z} teeth)")
        if not (np.all(np.isfinite(self.beta_left)) and np.all(np.isfinite(self.beta_right))):
            raise ValueError("missing flank (non-finite start angle)")
        if self.reference_radius is None:
            self.reference_radius = self.gear.pitch_radius
        if self.flanks is not None and len(self.flanks) != z:
            raise ValueError("flank data must be given for every tooth")

    @property
    def tooth_count(self) -> int:
        return self.gear.tooth_count_z2

    @staticmethod
    def nominal_angles(gear: GearSpec):
        z = gear.tooth_count_z2
        centre = 2.0 * math.pi * np.arange(z) / z
        half = math.pi / (2 * z) + involute_function(gear.alpha)
        return centre - half, centre + half

    @classmethod
    def nominal(cls, gear: GearSpec, **kw) -> "ToothSet":
        left, right = cls.nominal_angles(gear)
        return cls(gear, left, right, **kw)

    @classmethod
    def from_flank_offsets(cls, gear: GearSpec, left_um, right_um, **kw) -> "ToothSet":
        """Nominal wheel with each flank moved by an arc (um) along the reference circle."""
        ts = cls.nominal(gear, **kw)
        scale = 1.0 / (1000.0 * ts.reference_radius)
        # an arc at the reference circle is the same angle for every radius of an involute
        ts.beta_left = ts.beta_left + np.asarray(left_um, float) * scale
        ts.beta_right = ts.beta_right + np.asarray(right_um, float) * scale
        return ts

    def rotated(self, angle: float) -> "ToothSet":
        return ToothSet(
            self.gear, self.beta_left + angle, self.beta_right + angle,
            self.eccentricity, self.reference_radius, self.flanks,
        )

    # points on the flanks, measured about the rotation axis

    def _flank_theta(self, beta: float, side: str, r: float) -> float:
        inv = _inv_of_radius(self.gear.base_radius, r)
        return beta + inv if side == "left" else beta - inv

    def axis_angle_at_radius(self, beta: float, side: str, radius: float) -> float:
        """Polar angle about the axis where a flank crosses the circle of ``radius``."""
        ex, ey = self.eccentricity
        rb = self.gear.base_radius
        if ex == 0.0 and ey == 0.0:
            return self._flank_theta(beta, side, radius)

        def point(r):
            t = self._flank_theta(beta, side, r)
            return r * math.cos(t) + ex, r * math.sin(t) + ey

        def f(r):
            x, y = point(r)
            return math.hypot(x, y) - radius

        e = math.hypot(ex, ey)
        lo, hi = max(rb, radius - 2 * e - 1e-9), radius + 2 * e + 1e-9
        r = brentq(f, lo, hi, xtol=1e-14)
        x, y = point(r)
        return math.atan2(y, x)


@dataclass
class DeviationReport:
    F_alpha: dict  # side -> um (worst tooth)
    F_beta: dict
    f_pt: dict
    F_p: dict
    F_r: float
    R_s: float
    F_alpha_std: dict = field(default_factory=dict)
    F_beta_std: dict = field(default_factory=dict)
    cumulative: dict = field(default_factory=dict, repr=False)

    def as_parameters(self) -> dict:
        out = {}
        for side in ("left", "right"):
            for name in ("F_alpha", "F_beta", "f_pt", "F_p"):
                v = getattr(self, name).get(side)
                if v is not None:
                    out[f"{name} {side}"] = v
            for name in ("F_alpha_std", "F_beta_std"):
                v = getattr(self, name).get(side)
                if v is not None:
                    out[f"{name[:-4]} std {side}"] = v
        out["F_r"] = self.F_r
        out["R_s"] = self.R_s
        return out


# ----------------------------------------------------------------- form


def _window(n: int, eval_range) -> slice:
    lo, hi = eval_range
    if not 0.0 <= lo < hi <= 1.0:
        raise EmptyWindowError(f"bad evaluation range {eval_range}")
    a = int(math.ceil(lo * (n - 1)))
    b = int(math.floor(hi * (n - 1)))
    if b - a < 1:
        raise EmptyWindowError("evaluation window holds fewer than two samples")
    return slice(a, b + 1)


def form_deviations(flank, gear: GearSpec | None = None, eval_range=DEFAULT_EVAL_RANGE) -> dict:
    """Total profile (F_alpha) and helix (F_beta) deviation of one flank.

    ``flank`` is a (profile, face-width) array of normal deviations in um, or
    anything with a ``deviations`` attribute such as a simulated flank grid.
    F_alpha is taken along the profile at mid face width, F_beta along the
    face width at mid profile, each over the evaluation window.
    """
    d = np.asarray(getattr(flank, "deviations", flank), float)
    if d.ndim == 1:
        d = d[:, None]
    nu, nv = d.shape
    su = _window(nu, eval_range)
    prof = d[su, nv // 2]
    out = {"F_alpha": float(np.ptp(prof - prof.mean()))}
    if nv > 1:
        sv = _window(nv, eval_range)
        helix = d[nu // 2, sv]
        out["F_beta"] = float(np.ptp(helix - helix.mean()))
    else:
        out["F_beta"] = 0.0
    return out


# ----------------------------------------------------------------- pitch


def _wrap(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


def pitch_deviations(teeth: ToothSet, side: str = "right") -> dict:
    """Single and cumulative pitch deviations (um) of one flank side."""
    z = teeth.tooth_count
    if z < 3:
        raise ValueError("pitch evaluation needs at least three teeth")
    betas = teeth.beta_left if side == "left" else teeth.beta_right
    r = teeth.reference_radius
    phi = np.array([teeth.axis_angle_at_radius(b, side, r) for b in betas])
    pitch = np.array([_wrap(phi[(i + 1) % z] - phi[i] - 2 * math.pi / z) for i in range(z)])
    single = 1000.0 * r * pitch  # deviation of each actual pitch from nominal
    cumulative = np.concatenate([[0.0], np.cumsum(single[:-1])])
    return {
        "f_pt": float(np.max(np.abs(single))),
        "F_p": float(np.ptp(cumulative)),
        "single": single,
        "cumulative": cumulative,
    }


# ----------------------------------------------------------------- runout


def ball_positions(teeth: ToothSet, probe_diameter: float | None = None) -> np.ndarray:
    """Centre of a ball resting in each tooth gap, as (x, y) about the axis in mm.

    Gap i lies between the right flank of tooth i and the left flank of tooth i+1.
    """
    gear = teeth.gear
    rb = gear.base_radius
    rho = 0.5 * (probe_diameter if probe_diameter is not None else DEFAULT_PROBE_FACTOR * gear.module_mn)
    z = teeth.tooth_count
    ex, ey = teeth.eccentricity
    out = np.empty((z, 2))
    for i in range(z):
        b_right = teeth.beta_right[i]
        b_left = teeth.beta_left[(i + 1) % z] + (2 * math.pi if i + 1 == z else 0.0)
        # surfaces offset by the ball radius are involutes turned by rho / rb
        inv_c = rho / rb - 0.5 * (b_left - b_right)
        if inv_c <= 0:
            raise ProbeFitError(f"probe of diameter {2 * rho:.3f} mm drops through gap {i}")
        gamma = inverse_involute(inv_c)
        rc = rb / math.cos(gamma)
        contact = rb * math.tan(gamma) - rho  # generating-line length of the contact point
        if contact <= 0 or math.hypot(rb, contact) > gear.tip_radius:
            raise ProbeFitError(f"probe of diameter {2 * rho:.3f} mm does not contact both flanks of gap {i}")
        theta = 0.5 * (b_left + b_right)
        out[i] = rc * math.cos(theta) + ex, rc * math.sin(theta) + ey
    return out


def runout_Fr(teeth: ToothSet, probe_diameter: float | None = None) -> float:
    c = ball_positions(teeth, probe_diameter)
    return float(1000.0 * np.ptp(np.hypot(c[:, 0], c[:, 1])))


# ----------------------------------------------------------------- thickness


def chordal_thickness(teeth: ToothSet) -> np.ndarray:
    r = teeth.reference_radius
    inv = _inv_of_radius(teeth.gear.base_radius, r)
    psi = (teeth.beta_right - inv) - (teeth.beta_left + inv)
    return 2.0 * r * np.sin(0.5 * psi)


def thickness_variation_Rs(teeth: ToothSet) -> float:
    return float(1000.0 * np.ptp(chordal_thickness(teeth)))


# ----------------------------------------------------------------- all


def deviation_report(teeth: ToothSet, probe_diameter: float | None = None, eval_range=DEFAULT_EVAL_RANGE) -> DeviationReport:
    fa, fb, fa_sd, fb_sd = {}, {}, {}, {}
    if teeth.flanks is not None:
        for k, side in enumerate(("left", "right")):
            vals = [form_deviations(f[k], teeth.gear, eval_range) for f in teeth.flanks if f[k] is not None]
            if vals:
                a = np.array([v["F_alpha"] for v in vals])
                b = np.array([v["F_beta"] for v in vals])
                fa[side], fb[side] = float(a.max()), float(b.max())
                fa_sd[side], fb_sd[side] = float(a.std()), float(b.std())
    fpt, fp, cum = {}, {}, {}
    for side in ("left", "right"):
        p = pitch_deviations(teeth, side)
        fpt[side], fp[side], cum[side] = p["f_pt"], p["F_p"], p["cumulative"]
    return DeviationReport(
        F_alpha=fa,
        F_beta=fb,
        f_pt=fpt,
        F_p=fp,
        F_r=runout_Fr(teeth, probe_diameter),
        R_s=thickness_variation_Rs(teeth),
        F_alpha_std=fa_sd,
        F_beta_std=fb_sd,
        cumulative=cum,
    )
