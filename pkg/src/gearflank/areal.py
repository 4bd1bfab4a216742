"""Areal (3D) surface texture over heightmaps.

Rows run along y (tooth profile / height direction), columns along x (helix /
face-width direction). Heights and steps are in micrometres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import (
    UNDEFINED,
    NOT_REACHED,
    FilterLengthError,
    FitFailureError,
    InsufficientDataError,
    NoFeaturesError,
)
from .profile import knee_wavelength, material_curve_analysis, gaussian_smooth, split_exact

AREAL_ACF_THRESHOLD = 0.2
FRACTAL_MAX_LAG = 10


@dataclass
class Heightmap:
    heights: np.ndarray  # (ny, nx) um
    dx: float = 1.0
    dy: float = 1.0

    def __post_init__(self):
        self.heights = np.asarray(self.heights, dtype=float)
        if self.heights.ndim != 2:
            raise ValueError("heightmap must be two-dimensional")
        ny, nx = self.heights.shape
        if nx < 16 or ny < 16:
            raise InsufficientDataError(f"heightmap needs at least 16x16 samples, got {ny}x{nx}")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError("sampling steps must be positive")
        if not np.all(np.isfinite(self.heights)):
            raise ValueError("heightmap contains non-finite heights")

    @property
    def shape(self):
        return self.heights.shape

    @property
    def nx(self) -> int:
        return self.heights.shape[1]

    @property
    def ny(self) -> int:
        return self.heights.shape[0]

    def with_heights(self, z) -> "Heightmap":
        return Heightmap(z, self.dx, self.dy)

    def rot90(self) -> "Heightmap":
        """Quarter turn counter-clockwise; x and y swap roles."""
        return Heightmap(np.rot90(self.heights), self.dy, self.dx)

    @classmethod
    def from_grid(cls, grid) -> "Heightmap":
        """Heightmap of a simulated flank grid: y along the profile, x along the helix."""
        return cls(np.asarray(grid.deviations).copy(), dx=grid.dv, dy=grid.du)


@dataclass
class Summit:
    row: int
    col: int
    height: float  # um, about the mean plane
    curvature: float  # (kx + ky) / 2, 1/um
    kx: float
    ky: float


# ----------------------------------------------------------------- form / filter


_FORM_DEGREE = {"plane": 1, "poly2": 2, "poly5": 5}


def remove_form_areal(hm: Heightmap, form: str = "plane") -> Heightmap:
    if form not in _FORM_DEGREE:
        raise ValueError(f"unknown form {form!r}")
    deg = _FORM_DEGREE[form]
    ny, nx = hm.shape
    y, x = np.meshgrid(np.linspace(-1, 1, ny), np.linspace(-1, 1, nx), indexing="ij")
    cols = [x**i * y**j for i in range(deg + 1) for j in range(deg + 1 - i)]
    if hm.heights.size < len(cols) + 2:
        raise InsufficientDataError("too few samples for the requested form")
    a = np.column_stack([c.ravel() for c in cols])
    coef, _, rank, _ = np.linalg.lstsq(a, hm.heights.ravel(), rcond=None)
    if rank < len(cols):
        raise FitFailureError("form fit is rank deficient")
    resid = hm.heights - (a @ coef).reshape(hm.shape)
    return hm.with_heights(resid - resid.mean())


def gaussian_filter_areal(hm: Heightmap, lc: float) -> tuple[Heightmap, Heightmap]:
    """Separable Gaussian split into (waviness, roughness); cut-off lc in mm."""
    lc_um = 1000.0 * lc
    ny, nx = hm.shape
    if (nx - 1) * hm.dx < 2 * lc_um or (ny - 1) * hm.dy < 2 * lc_um:
        raise FilterLengthError("both map extents must be at least twice the cut-off")
    w = gaussian_smooth(hm.heights, hm.dx, lc_um, axis=1)
    w = gaussian_smooth(w, hm.dy, lc_um, axis=0)
    w, r = split_exact(hm.heights, w)
    return hm.with_heights(w), hm.with_heights(r)


# ----------------------------------------------------------------- height


def areal_height_params(hm: Heightmap) -> dict:
    d = hm.heights - hm.heights.mean()
    sq = float(np.sqrt(np.mean(d * d)))
    sp, sv = float(d.max()), float(-d.min())
    return {
        "Sa": float(np.mean(np.abs(d))),
        "Sq": sq,
        "St": sp + sv,
        "Sp": sp,
        "Sv": sv,
        "Ssk": float(np.mean(d**3) / sq**3) if sq > 0 else UNDEFINED,
        "Sku": float(np.mean(d**4) / sq**4) if sq > 0 else UNDEFINED,
    }


# ----------------------------------------------------------------- summits


def find_summits(hm: Heightmap) -> list[Summit]:
    """Interior points strictly higher than all eight neighbours."""
    z = hm.heights
    c = z[1:-1, 1:-1]
    mask = np.ones_like(c, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            mask &= c > z[1 + di : z.shape[0] - 1 + di, 1 + dj : z.shape[1] - 1 + dj]
    rows, cols = np.nonzero(mask)
    rows, cols = rows + 1, cols + 1
    mean = z.mean()
    kx = -(z[rows, cols - 1] - 2 * z[rows, cols] + z[rows, cols + 1]) / hm.dx**2
    ky = -(z[rows - 1, cols] - 2 * z[rows, cols] + z[rows + 1, cols]) / hm.dy**2
    return [
        Summit(int(r), int(q), float(z[r, q] - mean), float(0.5 * (a + b)), float(a), float(b))
        for r, q, a, b in zip(rows, cols, kx, ky)
    ]


def summit_params(hm: Heightmap) -> dict:
    s = find_summits(hm)
    if not s:
        raise NoFeaturesError("no summits")
    ny, nx = hm.shape
    area_mm2 = (nx - 2) * (ny - 2) * hm.dx * hm.dy / 1e6
    h = np.array([p.height for p in s])
    return {
        "Sds": len(s) / area_mm2,
        "Sqsum": float(np.sqrt(np.mean(h * h))),
        "Ssc": float(np.mean([p.curvature for p in s])),
        "Sscx": float(np.mean([p.kx for p in s])),
        "Sscy": float(np.mean([p.ky for p in s])),
    }


# ----------------------------------------------------------------- hybrid


def hybrid_params(hm: Heightmap) -> dict:
    gy, gx = np.gradient(hm.heights, hm.dy, hm.dx)
    return {
        "SΔq": float(np.sqrt(np.mean(gx * gx + gy * gy))),
        "SΔax": float(np.mean(np.abs(gx))),
        "SΔay": float(np.mean(np.abs(gy))),
        "Sdr": float((np.mean(np.sqrt(1.0 + gx * gx + gy * gy)) - 1.0) * 100.0),
    }


# ----------------------------------------------------------------- volume


def bearing_height(z_sorted_desc: np.ndarray, ratio: float) -> float:
    """Height above which a fraction ``ratio`` of the samples lies."""
    n = len(z_sorted_desc)
    k = max(int(math.ceil(ratio * n)) - 1, 0)
    return float(z_sorted_desc[k])


def void_volume(z: np.ndarray, level: float) -> float:
    """Void volume per unit area below ``level`` (um^3/um^2)."""
    return float(np.mean(np.maximum(level - z, 0.0)))


def volume_params(hm: Heightmap) -> dict:
    z = hm.heights.ravel()
    mean = z.mean()
    zs = np.sort(z)[::-1]
    sq = float(np.sqrt(np.mean((z - mean) ** 2)))
    out = {
        "Smmr": float(mean - zs[-1]) / 1000.0,
        "Smvr": float(zs[0] - mean) / 1000.0,
    }
    if sq == 0:
        out.update(Sbi=UNDEFINED, Sci=UNDEFINED, Svi=UNDEFINED)
        return out
    h05 = bearing_height(zs, 0.05)
    h80 = bearing_height(zs, 0.80)
    out["Sbi"] = sq / (h05 - mean) if h05 > mean else UNDEFINED
    out["Sci"] = (void_volume(z, h05) - void_volume(z, h80)) / sq
    out["Svi"] = void_volume(z, h80) / sq
    return out


# ----------------------------------------------------------------- texture


def areal_acf(hm: Heightmap) -> np.ndarray:
    """Biased normalised ACF on a centred (2ny-1, 2nx-1) lag grid."""
    d = hm.heights - hm.heights.mean()
    ny, nx = d.shape
    f = np.fft.rfft2(d, s=(2 * ny, 2 * nx))
    r = np.fft.irfft2(np.abs(f) ** 2, s=(2 * ny, 2 * nx))
    r = np.fft.fftshift(r)[1:, 1:]  # lag (0, 0) now at (ny - 1, nx - 1)
    r0 = r[ny - 1, nx - 1]
    if r0 <= 0:
        return np.ones_like(r)
    return np.clip(r / r0, -1.0, 1.0)


@dataclass
class TextureResult:
    angles: np.ndarray  # deg, 0 = x axis
    decay: np.ndarray  # um, floored at the half extent where not reached
    reached: np.ndarray  # bool per direction
    Sal: float
    Str: float
    Std: float
    isotropy: float


def texture_params(hm: Heightmap, threshold: float = AREAL_ACF_THRESHOLD) -> TextureResult:
    acf = areal_acf(hm)
    ny, nx = hm.shape
    cy, cx = ny - 1, nx - 1
    hx, hy = 0.5 * (nx - 1) * hm.dx, 0.5 * (ny - 1) * hm.dy
    step = 0.5 * min(hm.dx, hm.dy)
    angles = np.arange(180, dtype=float)
    decay = np.empty(180)
    reached = np.zeros(180, dtype=bool)
    tail = np.empty(180)  # ACF left at the end of each ray
    for i, a in enumerate(angles):
        c, s = math.cos(math.radians(a)), math.sin(math.radians(a))
        rmax = 1.0 / math.hypot(c / hx, s / hy)
        r = np.arange(0.0, rmax + 0.5 * step, step)
        vals = ndimage.map_coordinates(acf, [cy + r * s / hm.dy, cx + r * c / hm.dx], order=1, mode="nearest")
        tail[i] = vals[-1]
        below = np.nonzero(vals <= threshold)[0]
        if len(below):
            k = below[0]
            v0, v1 = vals[k - 1], vals[k]
            decay[i] = r[k - 1] + (v0 - threshold) / (v0 - v1) * (r[k] - r[k - 1])
            reached[i] = True
        else:
            decay[i] = rmax
    dmin, dmax = float(decay.min()), float(decay.max())
    str_ = dmin / dmax
    if reached.all():
        lay = int(np.argmax(decay))
    else:
        # rays that never decay are all floored; the lay is the one that stays most correlated
        lay = int(np.argmax(np.where(reached, -np.inf, tail)))
    return TextureResult(angles, decay, reached, dmin, str_, float(angles[lay]), 100.0 * str_)


# ----------------------------------------------------------------- spectra


@dataclass
class ArealSpectrum:
    power: np.ndarray  # (ny, nx) um^2 per bin, unshifted FFT layout, DC zeroed
    fx: np.ndarray  # 1/um
    fy: np.ndarray
    angles: np.ndarray  # deg, bin centres 0..179
    angular: np.ndarray  # power per 1 deg sector inside the inscribed disk
    wavelength_x: np.ndarray
    cumulated_x: np.ndarray
    wavelength_y: np.ndarray
    cumulated_y: np.ndarray
    knee_x: float | object
    knee_y: float | object

    @property
    def total(self) -> float:
        return float(self.power.sum())


def _axis_spectrum(power_axis: np.ndarray, f: np.ndarray, n: int, step: float):
    """Fold a marginal spectrum onto |f| and order it by ascending wavelength."""
    k = np.rint(np.abs(f) * n * step).astype(int)
    folded = np.bincount(k, weights=power_axis, minlength=n // 2 + 1)[1:]
    wl = n * step / np.arange(1, len(folded) + 1)
    return wl[::-1], folded[::-1]


def areal_psd_params(hm: Heightmap) -> ArealSpectrum:
    ny, nx = hm.shape
    if nx < 32 or ny < 32:
        raise InsufficientDataError("areal spectrum needs at least 32x32 samples")
    d = hm.heights - hm.heights.mean()
    f = np.fft.fft2(d)
    power = np.abs(f) ** 2 / (nx * ny) ** 2
    power[0, 0] = 0.0
    fx = np.fft.fftfreq(nx, hm.dx)
    fy = np.fft.fftfreq(ny, hm.dy)
    FY, FX = np.meshgrid(fy, fx, indexing="ij")

    # angular plot on the inscribed disk, angles folded to [0, 180)
    fmax = min(0.5 / hm.dx, 0.5 / hm.dy)
    inside = (np.hypot(FX, FY) <= fmax) & (power > 0)
    inside[0, 0] = False
    ang = np.degrees(np.arctan2(FY[inside], FX[inside])) % 180.0
    bins = np.rint(ang).astype(int) % 180
    angular = np.bincount(bins, weights=power[inside], minlength=180)

    wlx, px = _axis_spectrum(power.sum(axis=0), fx, nx, hm.dx)
    wly, py = _axis_spectrum(power.sum(axis=1), fy, ny, hm.dy)
    cx, cy = np.cumsum(px), np.cumsum(py)
    total = power.sum()

    def knee(wl, cum):
        if total <= 0 or cum[-1] <= 1e-12 * total:
            return UNDEFINED
        return knee_wavelength(wl, cum)

    return ArealSpectrum(power, fx, fy, np.arange(180.0), angular, wlx, cx, wly, cy, knee(wlx, cx), knee(wly, cy))


# ----------------------------------------------------------------- fractal


def structure_function(hm: Heightmap, max_lag: int = FRACTAL_MAX_LAG):
    """Mean squared height increment at lags 1..max_lag, averaged over x and y."""
    z = hm.heights
    lags = np.arange(1, max_lag + 1)
    sx = np.array([np.mean((z[:, k:] - z[:, :-k]) ** 2) for k in lags])
    sy = np.array([np.mean((z[k:, :] - z[:-k, :]) ** 2) for k in lags])
    step = math.sqrt(hm.dx * hm.dy)
    return lags * step, 0.5 * (sx + sy)


def fractal_dimension(hm: Heightmap) -> float:
    ny, nx = hm.shape
    if nx < 64 or ny < 64:
        raise InsufficientDataError("fractal dimension needs at least 64x64 samples")
    tau, s = structure_function(hm)
    if np.all(s == 0):
        return 2.0
    if np.any(s <= 0):
        raise InsufficientDataError("structure function vanishes inside the fit range")
    slope = np.polyfit(np.log(tau), np.log(s), 1)[0]
    return float(np.clip(3.0 - 0.5 * slope, 2.0, 3.0))


def areal_material_params(hm: Heightmap) -> dict:
    return material_curve_analysis(hm.heights.ravel(), prefix="S")


# ----------------------------------------------------------------- full report


AREAL_UNITS = {
    "Sa": "um", "Sq": "um", "St": "um", "Ssk": "1", "Sku": "1", "Smmr": "mm^3/mm^2", "Smvr": "mm^3/mm^2",
    "Sds": "1/mm^2", "Str": "1", "Sal": "um", "Std": "deg", "isotropy%": "%", "Sfd": "1", "SΔq": "um/um",
    "Ssc": "1/um", "Sdr": "%", "Sbi": "1", "Sci": "1", "Svi": "1", "S(1/fx)": "um", "S(1/fy)": "um",
    "SΔax": "um/um", "SΔay": "um/um", "Sqsum": "um", "Sscx": "1/um", "Sscy": "1/um", "Spq": "um",
    "Svq": "um", "Smq": "1", "Spk": "um", "Svk": "um", "Sk": "um", "Sr1": "1", "Sr2": "1",
    "Spq/St": "1", "Svq/St": "1", "Spk/St": "1", "Svk/St": "1", "Sk/St": "1", "dp1": "1", "ypp": "1",
}


def areal_parameters(hm: Heightmap):
    """Every areal parameter in report order, plus the series behind the plots."""
    h = areal_height_params(hm)
    vol = volume_params(hm)
    try:
        sm = summit_params(hm)
    except NoFeaturesError:
        sm = {"Sds": 0.0, "Sqsum": UNDEFINED, "Ssc": UNDEFINED, "Sscx": UNDEFINED, "Sscy": UNDEFINED}
    tex = texture_params(hm)
    hy = hybrid_params(hm)
    try:
        psd = areal_psd_params(hm)
    except InsufficientDataError:
        psd = None
    try:
        sfd = fractal_dimension(hm)
    except InsufficientDataError:
        sfd = UNDEFINED
    mat = areal_material_params(hm)
    st = h["St"]

    def rel(k):
        v = mat[k]
        return v / st if st > 0 and not isinstance(v, type(UNDEFINED)) else UNDEFINED

    out = {k: h[k] for k in ("Sa", "Sq", "St", "Ssk", "Sku")}
    out["Smmr"] = vol["Smmr"]
    out["Smvr"] = vol["Smvr"]
    out["Sds"] = sm["Sds"]
    out["Str"] = tex.Str
    out["Sal"] = tex.Sal
    out["Std"] = tex.Std
    out["isotropy%"] = tex.isotropy
    out["Sfd"] = sfd
    out["SΔq"] = hy["SΔq"]
    out["Ssc"] = sm["Ssc"]
    out["Sdr"] = hy["Sdr"]
    out["Sbi"] = vol["Sbi"]
    out["Sci"] = vol["Sci"]
    out["Svi"] = vol["Svi"]
    out["S(1/fx)"] = psd.knee_x if psd else UNDEFINED
    out["S(1/fy)"] = psd.knee_y if psd else UNDEFINED
    out["SΔax"] = hy["SΔax"]
    out["SΔay"] = hy["SΔay"]
    out["Sqsum"] = sm["Sqsum"]
    out["Sscx"] = sm["Sscx"]
    out["Sscy"] = sm["Sscy"]
    for k in ("Spq", "Svq", "Smq", "Spk", "Svk", "Sk", "Sr1", "Sr2"):
        out[k] = mat[k]
    for k in ("Spq", "Svq", "Spk", "Svk", "Sk"):
        out[f"{k}/St"] = rel(k)
    out["dp1"] = mat["dp1"]
    out["ypp"] = mat["ypp"]
    extras = {"texture": tex, "psd": psd, "material": mat["curve"], "not_reached": NOT_REACHED if not tex.reached.all() else None}
    return out, extras
