"""Profile (2D) surface texture: form removal, Gaussian filtering and the parameter families.

Heights and lateral positions are in micrometres; the filter cut-off is given in
millimetres, as is customary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import optimize, signal, stats

from .errors import (
    UNDEFINED,
    NOT_REACHED,
    DegenerateCurveError,
    FilterLengthError,
    FitFailureError,
    InsufficientDataError,
    NoFeaturesError,
    UndefinedAnisotropyError,
)

ProfileKind = Literal["primitive", "roughness", "waviness"]

GAUSS_ALPHA = math.sqrt(math.log(2.0) / math.pi)
PEAK_HYSTERESIS = 0.01  # fraction of Pt
JIS_SAMPLING_LENGTH = 800.0  # um
SECANT_WIDTH = 0.4
ACF_THRESHOLD = 0.1


@dataclass
class Profile:
    """Uniformly sampled height trace ``z`` (um) with step ``dx`` (um)."""

    z: np.ndarray
    dx: float
    kind: ProfileKind = "primitive"
    edge_samples: int = 0  # samples at each end distorted by filtering

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        if self.z.ndim != 1:
            raise ValueError("profile heights must be one-dimensional")
        if len(self.z) < 16:
            raise InsufficientDataError(f"profile needs at least 16 samples, got {len(self.z)}")
        if not (self.dx > 0 and math.isfinite(self.dx)):
            raise ValueError(f"sampling step must be positive, got {self.dx}")
        if not np.all(np.isfinite(self.z)):
            raise ValueError("profile contains non-finite heights")

    def __len__(self):
        return len(self.z)

    @property
    def x(self) -> np.ndarray:
        return np.arange(len(self.z)) * self.dx

    @property
    def length(self) -> float:
        """Trace length in um, (n - 1) * dx."""
        return (len(self.z) - 1) * self.dx

    def with_z(self, z, kind=None) -> "Profile":
        return Profile(z, self.dx, kind or self.kind, self.edge_samples)


# --------------------------------------------------------------------------
# reference form and filtering


def fit_circle(x, z):
    """Least-squares circle through (x, z); returns (xc, zc, radius)."""
    x = np.asarray(x, float)
    z = np.asarray(z, float)
    # algebraic fit on centred coordinates, then geometric refinement
    mx, mz = x.mean(), z.mean()
    u, w = x - mx, z - mz
    a = np.column_stack([u, w, np.ones_like(u)])
    b = u * u + w * w
    sol, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < 3:
        raise FitFailureError("degenerate data for a circle fit")
    uc, wc = sol[0] / 2.0, sol[1] / 2.0
    r2 = sol[2] + uc * uc + wc * wc
    span = max(np.ptp(x), np.ptp(z))
    if not r2 > 0 or math.sqrt(r2) > 1e7 * span:
        raise FitFailureError("data are collinear; no finite circle fits")

    def resid(p):
        return np.hypot(u - p[0], w - p[1]) - p[2]

    res = optimize.least_squares(resid, [uc, wc, math.sqrt(r2)], x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    if not res.success:
        raise FitFailureError(res.message)
    uc, wc, r = res.x
    return uc + mx, wc + mz, abs(r)


def fit_reference(profile: Profile, form: Literal["line", "poly5", "circle"] = "line") -> Profile:
    """Remove the least-squares reference form and return the residual profile."""
    x, z = profile.x, profile.z
    if form not in ("line", "poly5", "circle"):
        raise ValueError(f"unknown reference form {form!r}")
    if np.ptp(z) == 0:
        # a constant trace is its own reference; avoid least-squares round-off
        return profile.with_z(np.zeros_like(z))
    if form == "line" or form == "poly5":
        deg = 1 if form == "line" else 5
        if len(z) < deg + 2:
            raise InsufficientDataError(f"{form} fit needs at least {deg + 2} samples")
        poly = np.polynomial.Polynomial.fit(x, z, deg)
        resid = z - poly(x)
        if form == "line":
            resid = resid - resid.mean()
        return profile.with_z(resid)
    if form == "circle":
        xc, zc, r = fit_circle(x, z)
        dx2 = r * r - (x - xc) ** 2
        if np.any(dx2 < 0):
            raise FitFailureError("fitted circle does not span the trace")
        sign = 1.0 if np.mean(z - zc) >= 0 else -1.0
        return profile.with_z(z - (zc + sign * np.sqrt(dx2)))
    raise ValueError(f"unknown reference form {form!r}")


def gaussian_weights(dx: float, lc_um: float) -> np.ndarray:
    """Sampled Gaussian weighting function truncated at +-lc."""
    half = int(math.floor(lc_um / dx))
    x = np.arange(-half, half + 1) * dx
    al = GAUSS_ALPHA * lc_um
    return np.exp(-math.pi * (x / al) ** 2) / al


def gaussian_smooth(z: np.ndarray, dx: float, lc_um: float, axis: int = -1) -> np.ndarray:
    """Gaussian mean line with the weights renormalised over the truncated support."""
    k = gaussian_weights(dx, lc_um)
    z = np.asarray(z, float)
    # smoothing deviations from one ordinate keeps constant input exactly constant
    ref = z.flat[0]
    z = z - ref
    shape = [1] * z.ndim
    shape[axis] = len(k)
    kk = k.reshape(shape)
    num = signal.oaconvolve(z, kk, mode="same", axes=axis)
    den = np.convolve(np.ones(z.shape[axis]), k, mode="same")
    dshape = [1] * z.ndim
    dshape[axis] = len(den)
    return num / den.reshape(dshape) + ref


def split_exact(z: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Adjust ``w`` by a few ulps so that ``w + (z - w)`` reproduces ``z`` bit for bit.

    This is achievable wherever ``|w|`` is comparable to ``|z|``. Where the mean
    line is much larger than the trace (filter edges, zero crossings) the sum
    can be off by an ulp of ``w``.
    """
    shape = np.shape(z)
    z = np.asarray(z, float).ravel()
    r = z - np.asarray(w, float).ravel()
    w = z - r
    bad = np.flatnonzero(w + r != z)
    for i in bad:
        if not abs(w[i]) < 4.0 * abs(z[i]):
            continue
        up = down = w[i]
        for _ in range(16):
            up, down = np.nextafter(up, np.inf), np.nextafter(down, -np.inf)
            hit = False
            for c in (up, down):
                for rr in (r[i], z[i] - c):
                    if c + rr == z[i]:
                        w[i], r[i], hit = c, rr, True
                        break
                if hit:
                    break
            if hit:
                break
    return w.reshape(shape), r.reshape(shape)


def gaussian_filter(profile: Profile, lc: float) -> tuple[Profile, Profile]:
    """Split a primitive profile into (waviness, roughness) with cut-off lc in mm."""
    lc_um = 1000.0 * lc
    if not lc_um > 0:
        raise FilterLengthError("cut-off must be positive")
    if profile.length < 2.0 * lc_um:
        raise FilterLengthError(
            f"trace length {profile.length:.1f} um is shorter than twice the cut-off ({2 * lc_um:.1f} um)"
        )
    w = gaussian_smooth(profile.z, profile.dx, lc_um)
    w, r = split_exact(profile.z, w)
    edge = int(math.ceil(0.5 * lc_um / profile.dx))
    return (
        Profile(w, profile.dx, "waviness", edge),
        Profile(r, profile.dx, "roughness", edge),
    )


# --------------------------------------------------------------------------
# amplitude, spacing, slope and peak parameters


def _centered(profile: Profile) -> np.ndarray:
    return profile.z - profile.z.mean()


def find_profile_peaks(d: np.ndarray) -> np.ndarray:
    """Local maxima of a mean-corrected trace, with a 1 % of Pt prominence floor."""
    pt = float(d.max() - d.min())
    if pt == 0.0:
        return np.empty(0, dtype=int)
    peaks, _ = signal.find_peaks(d, prominence=PEAK_HYSTERESIS * pt)
    return peaks


def _ten_point_height(d: np.ndarray) -> float:
    peaks = find_profile_peaks(d)
    valleys = find_profile_peaks(-d)
    hi = np.sort(d[peaks])[::-1][:5] if len(peaks) >= 5 else np.sort(d)[::-1][:5]
    lo = np.sort(d[valleys])[:5] if len(valleys) >= 5 else np.sort(d)[:5]
    return float(hi.mean() - lo.mean())


def ten_point_height_jis(profile: Profile) -> float:
    """Mean over 0.8 mm sampling lengths of (5 highest peaks - 5 deepest valleys)."""
    d = _centered(profile)
    per = int(round(JIS_SAMPLING_LENGTH / profile.dx))
    count = 5 if profile.length >= 5 * JIS_SAMPLING_LENGTH else 3
    count = min(count, len(d) // max(per, 1))
    if count < 1 or per < 16:
        return _ten_point_height(d)
    return float(np.mean([_ten_point_height(d[i * per : (i + 1) * per]) for i in range(count)]))


def amplitude_params(profile: Profile) -> dict:
    d = _centered(profile)
    pq = float(np.sqrt(np.mean(d * d)))
    pp = float(d.max())
    pv = float(-d.min())
    pt = pp + pv
    out = {
        "Pa": float(np.mean(np.abs(d))),
        "Pq": pq,
        "Pt": pt,
        "Pp": pp,
        "Pv": pv,
        "Pp/Pt": pp / pt if pt > 0 else UNDEFINED,
        "Psk": float(np.mean(d**3) / pq**3) if pq > 0 else UNDEFINED,
        "Pku": float(np.mean(d**4) / pq**4) if pq > 0 else UNDEFINED,
        "PzJIS": ten_point_height_jis(profile) if pt > 0 else 0.0,
    }
    return out


def _upcrossings(d: np.ndarray, dx: float, band: float) -> np.ndarray:
    """Positions (um) where the trace rises through the mean line, with a hysteresis band."""
    out = []
    state = 0  # -1 below band, +1 above
    last_neg = None
    for i, v in enumerate(d):
        if v < -band:
            state = -1
            last_neg = i
        elif v > band and state == -1:
            # last sign change between last_neg and i
            j = last_neg
            while j + 1 < i and d[j + 1] <= 0:
                j += 1
            z0, z1 = d[j], d[j + 1]
            out.append((j + (-z0) / (z1 - z0)) * dx if z1 != z0 else j * dx)
            state = 1
        elif v > band:
            state = 1
    return np.asarray(out)


def spacing_params(profile: Profile) -> dict:
    d = _centered(profile)
    pt = float(d.max() - d.min())
    if pt == 0.0:
        raise NoFeaturesError("flat profile has no profile elements or peaks")
    ups = _upcrossings(d, profile.dx, PEAK_HYSTERESIS * pt)
    if len(ups) < 2:
        raise NoFeaturesError("fewer than two mean-line up-crossings")
    peaks = find_profile_peaks(d)
    if len(peaks) < 2:
        raise NoFeaturesError("fewer than two local peaks")
    return {
        "PSm": float(np.mean(np.diff(ups))),
        "PS": float(np.mean(np.diff(peaks)) * profile.dx),
    }


def slopes(profile: Profile, points: int = 3) -> np.ndarray:
    z, dx = profile.z, profile.dx
    need = {2: 2, 3: 3, 7: 7}
    if points not in need:
        raise ValueError("slope stencil must use 2, 3 or 7 points")
    if len(z) < need[points] + 1:
        raise InsufficientDataError(f"{points}-point slope needs more samples")
    if points == 2:
        return (z[1:] - z[:-1]) / dx
    if points == 3:
        return (z[2:] - z[:-2]) / (2.0 * dx)
    return (z[6:] - 9.0 * z[5:-1] + 45.0 * z[4:-2] - 45.0 * z[2:-4] + 9.0 * z[1:-5] - z[:-6]) / (60.0 * dx)


def slope_params(profile: Profile, points: int = 3) -> dict:
    s = slopes(profile, points)
    pda = float(np.mean(np.abs(s)))
    pdq = float(np.sqrt(np.mean(s * s)))
    d = _centered(profile)
    pq = float(np.sqrt(np.mean(d * d)))
    return {
        "PΔa": pda,
        "PΔq": pdq,
        "Pλq": 2.0 * math.pi * pq / pdq if pdq > 0 else UNDEFINED,
    }


def resample(profile: Profile, step: float) -> Profile:
    x_new = np.arange(0.0, profile.length + 1e-9 * step, step)
    return Profile(np.interp(x_new, profile.x, profile.z), step, profile.kind)


def peak_params(profile: Profile, step: float | None = None) -> dict:
    """Peak curvature, density and rms height from 3-point maxima.

    ``step`` (um) resamples the trace first; the value used is returned as
    ``step`` so reports can record it.
    """
    p = resample(profile, step) if step is not None else profile
    d = _centered(p)
    peaks = find_profile_peaks(d)
    if len(peaks) == 0:
        raise NoFeaturesError("no local peaks")
    curv = np.abs(d[peaks - 1] - 2.0 * d[peaks] + d[peaks + 1]) / p.dx**2
    return {
        "Ppc3": float(curv.mean()),
        "Pds3": len(peaks) / (p.length / 1000.0),
        "Pδ*": float(np.sqrt(np.mean(d[peaks] ** 2))),
        "step": p.dx,
    }


# --------------------------------------------------------------------------
# autocorrelation and spectra


@dataclass
class AcfResult:
    lags: np.ndarray  # um
    acf: np.ndarray
    correlation_length: float | object  # um or NOT_REACHED


def autocorrelation(d: np.ndarray) -> np.ndarray:
    """Biased autocorrelation of a mean-corrected sequence, normalised to 1 at lag 0."""
    n = len(d)
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(d, nfft)
    r = np.fft.irfft(f * np.conj(f), nfft)[:n]
    if r[0] <= 0:
        return np.ones(n)
    acf = r / r[0]
    acf[0] = 1.0
    return np.clip(acf, -1.0, 1.0)


def first_crossing(lags: np.ndarray, values: np.ndarray, level: float):
    """First lag at which ``values`` drops to ``level``, linearly interpolated."""
    below = np.nonzero(values <= level)[0]
    if len(below) == 0:
        return None
    i = below[0]
    if i == 0:
        return float(lags[0])
    v0, v1 = values[i - 1], values[i]
    return float(lags[i - 1] + (v0 - level) / (v0 - v1) * (lags[i] - lags[i - 1]))


def acf_analysis(profile: Profile, threshold: float = ACF_THRESHOLD) -> AcfResult:
    d = _centered(profile)
    acf = autocorrelation(d)
    lags = np.arange(len(d)) * profile.dx
    half = len(d) // 2 + 1
    pb = first_crossing(lags[:half], acf[:half], threshold)
    return AcfResult(lags, acf, NOT_REACHED if pb is None else pb)


@dataclass
class PsdResult:
    wavelength: np.ndarray  # um, ascending (highest frequency first)
    power: np.ndarray  # um^2 per bin, sums to Pq^2
    length: float  # um, N * dx
    cumulated: np.ndarray  # um^2, running sum from short to long wavelengths
    knee_wavelength: float  # um

    @property
    def density(self) -> np.ndarray:
        """Power spectral density in um^3."""
        return self.power * self.length

    @property
    def total(self) -> float:
        return float(self.cumulated[-1])


def signed_menger_curvature(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Curvature of the circle through each interior point and its neighbours.

    Positive for a convex (turning left) corner, negative for a concave one.
    """
    ax, ay = x[:-2], y[:-2]
    bx, by = x[1:-1], y[1:-1]
    cx, cy = x[2:], y[2:]
    cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    ab = np.hypot(bx - ax, by - ay)
    bc = np.hypot(cx - bx, cy - by)
    ca = np.hypot(cx - ax, cy - ay)
    den = ab * bc * ca
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(den > 0, 2.0 * cross / den, 0.0)
    return k


def knee_wavelength(wavelength: np.ndarray, cumulated: np.ndarray) -> float:
    """Wavelength where the normalised cumulated spectrum bends over most sharply.

    Wavelengths must be ascending. Curvature is taken against log10(wavelength);
    the concave (saturating) corner with the largest curvature wins, ties going
    to the shorter wavelength.
    """
    total = cumulated[-1]
    if len(wavelength) < 3 or total <= 0:
        return float(wavelength[len(wavelength) // 2])
    x = np.log10(wavelength)
    y = cumulated / total
    k = -signed_menger_curvature(x, y)
    i = int(np.argmax(k)) + 1
    return float(wavelength[i])


def periodogram(d: np.ndarray, dx: float):
    """One-sided periodogram of a mean-corrected trace: (wavelength, power) by ascending wavelength."""
    n = len(d)
    f = np.fft.rfft(d)
    power = np.abs(f) ** 2 / n**2
    power[1:] *= 2.0
    if n % 2 == 0:
        power[-1] /= 2.0
    k = np.arange(1, len(f))
    wavelength = n * dx / k
    return wavelength[::-1], power[1:][::-1]


def psd_analysis(profile: Profile) -> PsdResult:
    if len(profile.z) < 32:
        raise InsufficientDataError("spectral analysis needs at least 32 samples")
    d = _centered(profile)
    wl, power = periodogram(d, profile.dx)
    cum = np.cumsum(power)
    return PsdResult(wl, power, len(d) * profile.dx, cum, knee_wavelength(wl, cum))


# --------------------------------------------------------------------------
# material ratio curve


@dataclass
class MaterialRatioCurve:
    ratio: np.ndarray  # 0 .. 1 ascending
    height: np.ndarray  # um, nonincreasing

    @classmethod
    def from_heights(cls, z) -> "MaterialRatioCurve":
        c = np.sort(np.ravel(np.asarray(z, float)))[::-1]
        n = len(c)
        if n < 2:
            raise InsufficientDataError("material curve needs at least two ordinates")
        return cls(np.arange(n) / (n - 1), c)

    def height_at(self, ratio: float) -> float:
        return float(np.interp(ratio, self.ratio, self.height))


@dataclass
class SecantResult:
    start: int  # first sample of the flattest 40 % window
    stop: int
    Pk: float
    Ppk: float
    Pvk: float
    Mr1: float
    Mr2: float
    upper: float  # equivalent-line height at 0 %
    lower: float  # equivalent-line height at 100 %


def _falls_below(c, p, level, strict):
    """Ratio where the nonincreasing curve c(p) passes below ``level``."""
    idx = np.nonzero(c < level if strict else c <= level)[0]
    if len(idx) == 0:
        return 1.0
    i = idx[0]
    if i == 0:
        return 0.0
    c0, c1 = c[i - 1], c[i]
    return float(p[i - 1] + (c0 - level) / (c0 - c1) * (p[i] - p[i - 1]))


def _area_above(p, c, level, p_stop):
    """Integral over [0, p_stop] of (c - level), c sampled at p (trapezoid)."""
    mask = p <= p_stop
    pp = np.append(p[mask], p_stop)
    cc = np.append(c[mask], level)
    h = np.maximum(cc - level, 0.0)
    return float(np.sum(0.5 * (h[1:] + h[:-1]) * np.diff(pp)))


def secant_params(curve: MaterialRatioCurve, width: float = SECANT_WIDTH) -> SecantResult:
    """Core/peak/valley split from the flattest secant spanning ``width`` of the ratio axis."""
    p, c = curve.ratio, curve.height
    n = len(c)
    w = int(round(width * (n - 1)))
    drop = c[: n - w] - c[w:]
    i = int(np.argmin(drop))
    j = i + w
    slope = (c[j] - c[i]) / (p[j] - p[i])
    upper = c[i] - slope * p[i]
    lower = upper + slope
    pk = upper - lower
    mr1 = _falls_below(c, p, upper, strict=False)
    mr2 = _falls_below(c, p, lower, strict=True)
    a1 = _area_above(p, c, upper, mr1)
    # valley area mirrors the peak area on the reversed, negated curve
    a2 = _area_above(1.0 - p[::-1], -c[::-1], -lower, 1.0 - mr2)
    ppk = 2.0 * a1 / mr1 if mr1 > 0 else 0.0
    pvk = 2.0 * a2 / (1.0 - mr2) if mr2 < 1 else 0.0
    return SecantResult(i, j, pk, ppk, pvk, mr1, mr2, upper, lower)


@dataclass
class ProbabilityResult:
    Ppq: float
    Pvq: float
    Pmq: float
    intersection: float  # standard normal quantile of the intersection


PROB_TAIL = 0.001
PROB_EXCLUDE = 0.5  # quantile units around the intersection
PROB_SAMPLES = 2000


def _line(x, y):
    a = np.vstack([x, np.ones_like(x)]).T
    (m, b), *_ = np.linalg.lstsq(a, y, rcond=None)
    return m, b


def probability_params(curve: MaterialRatioCurve) -> ProbabilityResult:
    """Plateau/valley two-line fit of the material curve on a Gaussian quantile axis."""
    c_desc = curve.height
    heights = c_desc[::-1]  # ascending
    n = len(heights)
    # material ratio of a height is the fraction of ordinates above it
    x = np.linspace(stats.norm.ppf(PROB_TAIL), stats.norm.ppf(1 - PROB_TAIL), min(PROB_SAMPLES, max(n, 16)))
    p = stats.norm.cdf(x)
    q = np.quantile(heights, 1.0 - p)  # height at material ratio p
    if np.ptp(q) == 0:
        return ProbabilityResult(0.0, 0.0, UNDEFINED, UNDEFINED)

    # breakpoint minimising the two-line squared error
    best = (math.inf, None)
    for b in range(3, len(x) - 3):
        m1, c1 = _line(x[:b], q[:b])
        m2, c2 = _line(x[b:], q[b:])
        sse = np.sum((q[:b] - m1 * x[:b] - c1) ** 2) + np.sum((q[b:] - m2 * x[b:] - c2) ** 2)
        if sse < best[0]:
            best = (sse, b, m1, c1, m2, c2)
    _, b, m1, c1, m2, c2 = best

    def cross(m1, c1, m2, c2, fallback):
        if m1 == m2:
            return fallback
        return (c2 - c1) / (m1 - m2)

    def transition(m1, c1, m2, c2, xb):
        # lines of well separated strata meet far from the data; keep the breakpoint then
        xs = cross(m1, c1, m2, c2, xb)
        return xs if abs(xs - xb) <= PROB_EXCLUDE else xb

    xb = 0.5 * (x[b - 1] + x[b])
    xs = transition(m1, c1, m2, c2, xb)
    upper = x < xs - PROB_EXCLUDE
    lower = x > xs + PROB_EXCLUDE
    if upper.sum() >= 3 and lower.sum() >= 3:
        m1, c1 = _line(x[upper], q[upper])
        m2, c2 = _line(x[lower], q[lower])
        xs = transition(m1, c1, m2, c2, xs)
    xs = float(np.clip(xs, x[0], x[-1]))
    pm = float(stats.norm.cdf(xs))

    # each stratum's spread is the slope on its own quantile axis; on the shared
    # axis a stratum holding a small share of the ratio range looks too steep
    upper = x < xs - PROB_EXCLUDE
    lower = x > xs + PROB_EXCLUDE
    if upper.sum() >= 3:
        m1, _ = _line(stats.norm.ppf(p[upper] / pm), q[upper])
    if lower.sum() >= 3:
        m2, _ = _line(stats.norm.ppf((p[lower] - pm) / (1.0 - pm)), q[lower])
    return ProbabilityResult(abs(float(m1)), abs(float(m2)), pm, xs)


@dataclass
class ThreeParameterFit:
    location: float
    scale: float
    shape: float
    dp1: float  # |d height / d ratio| at the inflexion, standardised units
    ypp: float  # standardised height of the inflexion


def _richards_ratio(h, mu, s, nu):
    return 1.0 - (1.0 + np.exp(-(h - mu) / s)) ** (-nu)


def three_parameter_fit(curve: MaterialRatioCurve, samples: int = 1000) -> ThreeParameterFit:
    """Fit the standardised material curve with a three-parameter sigmoid.

    Heights are scaled to [0, 1]; the material ratio is modelled as
    ``1 - (1 + exp(-(h - location) / scale)) ** -shape``.
    """
    c = curve.height
    span = c[0] - c[-1]
    if not span > 0:
        raise DegenerateCurveError("constant material curve cannot be standardised")
    p_grid = np.linspace(0.0, 1.0, samples)
    h = (np.interp(p_grid, curve.ratio, c) - c[-1]) / span
    p0 = [float(np.interp(0.5, p_grid, h)), 0.1, 1.0]
    try:
        (mu, s, nu), _ = optimize.curve_fit(
            _richards_ratio,
            h,
            p_grid,
            p0=p0,
            bounds=([-1.0, 1e-4, 0.02], [2.0, 10.0, 50.0]),
            maxfev=20000,
        )
    except RuntimeError as exc:
        raise DegenerateCurveError(f"three-parameter fit did not converge: {exc}") from exc
    dp1 = s * (1.0 + 1.0 / nu) ** (nu + 1.0)
    ypp = mu + s * math.log(nu)
    return ThreeParameterFit(float(mu), float(s), float(nu), float(dp1), float(ypp))


def material_curve_analysis(profile_or_heights, prefix: str = "P") -> dict:
    """Secant, probability and three-parameter descriptions of the material curve.

    ``prefix`` "S" produces the areal names (Spk, Sr1, ...).
    """
    z = profile_or_heights.z if isinstance(profile_or_heights, Profile) else np.ravel(profile_or_heights)
    curve = MaterialRatioCurve.from_heights(z)
    sec = secant_params(curve)
    prob = probability_params(curve)
    try:
        tp = three_parameter_fit(curve)
        dp1, ypp = tp.dp1, tp.ypp
    except DegenerateCurveError:
        dp1 = ypp = UNDEFINED
    if prefix == "S":
        names = ("Sk", "Spk", "Svk", "Sr1", "Sr2", "Spq", "Svq", "Smq")
    else:
        names = ("Pk", "Ppk", "Pvk", "Mr1", "Mr2", "Ppq", "Pvq", "Pmq")
    values = (sec.Pk, sec.Ppk, sec.Pvk, sec.Mr1, sec.Mr2, prob.Ppq, prob.Pvq, prob.Pmq)
    out = dict(zip(names, values))
    out["dp1"] = dp1
    out["ypp"] = ypp
    out["curve"] = curve
    return out


# --------------------------------------------------------------------------
# anisotropy and conregular model


@dataclass
class AnisotropyResult:
    pq2_max: float
    pq2_min: float
    k_alpha: float


def kalpha(variances) -> AnisotropyResult:
    """Relative spread of directional height variances (0 isotropic, 1 fully oriented)."""
    v = np.asarray(variances, float)
    if len(v) < 2:
        raise ValueError("need at least two variances")
    if np.any(v < 0):
        raise ValueError("variances must be non-negative")
    vmax, vmin = float(v.max()), float(v.min())
    if vmax == 0:
        raise UndefinedAnisotropyError("all variances are zero")
    return AnisotropyResult(vmax, vmin, (vmax - vmin) / vmax)


@dataclass
class ConregularResult:
    rising_count: int
    rising_length: float  # um
    rising_slope: float  # mean 7-point slope over rising runs
    falling_count: int
    falling_length: float
    falling_slope: float
    position: np.ndarray = field(repr=False, default=None)  # um
    rise_increase: np.ndarray = field(repr=False, default=None)  # cumulative height gained, um
    fall_increase: np.ndarray = field(repr=False, default=None)  # cumulative height lost, um


def conregular_analysis(profile: Profile) -> ConregularResult:
    """Split the trace at its local extrema into rising and falling runs."""
    z, dx = profile.z, profile.dx
    diff = np.diff(z)
    sign = np.sign(diff)
    s7 = np.full(len(z), np.nan)
    if len(z) >= 7:
        s7[3:-3] = slopes(profile, 7)
    position = np.arange(len(diff)) * dx + 0.5 * dx
    rise = np.cumsum(np.where(diff > 0, diff, 0.0))
    fall = np.cumsum(np.where(diff < 0, -diff, 0.0))

    if not np.any(sign):
        warnings.warn("constant profile: no rising or falling segments", RuntimeWarning, stacklevel=2)
        return ConregularResult(0, 0.0, 0.0, 0, 0.0, 0.0, position, rise, fall)

    runs = []  # (sign, first diff index, last diff index)
    start = None
    for i, s in enumerate(sign):
        if s == 0:
            continue
        if start is None or s != runs_sign:
            if start is not None:
                runs.append((runs_sign, start, last))
            start, runs_sign = i, s
        last = i
    runs.append((runs_sign, start, last))
    if len(runs) == 1:
        warnings.warn("monotone profile: single segment", RuntimeWarning, stacklevel=2)

    def summarise(sgn):
        sel = [r for r in runs if r[0] == sgn]
        length = float(sum(int(np.sum(sign[a : b + 1] == sgn)) for _, a, b in sel) * dx)
        vals = []
        for _, a, b in sel:
            # slope samples at the run's interior ordinates
            seg = s7[a + 1 : b + 1]
            vals.append(seg[np.isfinite(seg)])
        vals = np.concatenate(vals) if vals else np.empty(0)
        mean = float(vals.mean()) if len(vals) else 0.0
        return len(sel), length, mean

    rc, rl, rs = summarise(1)
    fc, fl, fs = summarise(-1)
    return ConregularResult(rc, rl, rs, fc, fl, fs, position, rise, fall)


# --------------------------------------------------------------------------
# full report


PROFILE_UNITS = {
    "Pa": "um", "Pq": "um", "Pt": "um", "PzJIS": "um", "Pp": "um", "Pv": "um", "Pp/Pt": "1",
    "Psk": "1", "Pku": "1", "Pk": "um", "Ppk": "um", "Pvk": "um", "Mr1": "1", "Mr2": "1",
    "Ppq": "um", "Pvq": "um", "Pmq": "1", "PS": "um", "PSm": "um", "PΔq": "um/um", "PΔa": "um/um",
    "Pλq": "um", "P(1/f)": "um", "Pβ0.1": "um", "Rq²": "um^2", "Ppc3": "1/um", "Pds3": "1/mm",
    "Pδ*": "um", "Kα": "1", "G²(λ)": "um^2", "dp1": "1", "ypp": "1",
}


def _safe(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (NoFeaturesError, InsufficientDataError):
        return None


def profile_parameters(profile: Profile, slope_points: int = 7, peak_step: float | None = None, kalpha_with=None):
    """Every profile parameter, in report order. Values are floats or Missing markers."""
    amp = amplitude_params(profile)
    spacing = _safe(spacing_params, profile) or {"PSm": UNDEFINED, "PS": UNDEFINED}
    slope = slope_params(profile, slope_points)
    peaks = _safe(peak_params, profile, peak_step) or {"Ppc3": UNDEFINED, "Pds3": UNDEFINED, "Pδ*": UNDEFINED}
    acf = acf_analysis(profile)
    psd = _safe(psd_analysis, profile)
    mat = material_curve_analysis(profile)
    pq2 = amp["Pq"] ** 2
    ka = UNDEFINED
    if kalpha_with is not None:
        other = amplitude_params(kalpha_with)["Pq"] ** 2
        if max(pq2, other) > 0:
            ka = kalpha([pq2, other]).k_alpha

    out = {k: amp[k] for k in ("Pa", "Pq", "Pt", "PzJIS", "Pp", "Pv", "Pp/Pt", "Psk", "Pku")}
    for k in ("Pk", "Ppk", "Pvk", "Mr1", "Mr2", "Ppq", "Pvq", "Pmq"):
        out[k] = mat[k]
    out["PS"] = spacing["PS"]
    out["PSm"] = spacing["PSm"]
    out["PΔq"] = slope["PΔq"]
    out["PΔa"] = slope["PΔa"]
    out["Pλq"] = slope["Pλq"]
    out["P(1/f)"] = psd.knee_wavelength if psd is not None else UNDEFINED
    out["Pβ0.1"] = acf.correlation_length
    out["Rq²"] = pq2
    out["Ppc3"] = peaks["Ppc3"]
    out["Pds3"] = peaks["Pds3"]
    out["Pδ*"] = peaks["Pδ*"]
    out["Kα"] = ka
    out["G²(λ)"] = psd.total if psd is not None else UNDEFINED
    out["dp1"] = mat["dp1"]
    out["ypp"] = mat["ypp"]
    extras = {"acf": acf, "psd": psd, "material": mat["curve"], "conregular": None}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            extras["conregular"] = conregular_analysis(profile)
    except Exception:  # noqa: BLE001 - series output only
        extras["conregular"] = None
    return out, extras
