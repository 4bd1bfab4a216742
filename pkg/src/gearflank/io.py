"""Text file formats, parameter reports, plot series, report comparison and run configs."""

from __future__ import annotations

import configparser
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .accuracy import ToothSet
from .areal import AREAL_UNITS, Heightmap
from .errors import ComparisonError, ConfigError, Missing, ParseError
from .generation import GenerationParams
from .geometry import GearSpec, HobSpec, ShaperSpec
from .profile import PROFILE_UNITS, Profile

SIG = 9  # significant digits for every number written
STATUSES = ("ok", "undefined", "not-reached", "warning")


def fmt(v: float) -> str:
    return f"{v:.{SIG}g}"


def round_sig(v: float) -> float:
    return float(fmt(v))


# ----------------------------------------------------------------- heightmaps

_HEADER = re.compile(r"#\s*nx=(\S+)\s+ny=(\S+)\s+dx_um=(\S+)\s+dy_um=(\S+)\s*$")


def write_heightmap(path, hm: Heightmap) -> None:
    ny, nx = hm.shape
    lines = [f"# nx={nx} ny={ny} dx_um={fmt(hm.dx)} dy_um={fmt(hm.dy)}"]
    lines.extend(" ".join(fmt(v) for v in row) for row in hm.heights)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _numbers(tokens, path, lineno):
    try:
        vals = [float(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(f"bad number ({exc})", path, lineno) from None
    if not all(math.isfinite(v) for v in vals):
        raise ParseError("non-finite value", path, lineno)
    return vals


def read_heightmap(path) -> Heightmap:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read heightmap ({exc.strerror})", path) from None
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty file", path, 1)
    m = _HEADER.match(lines[0].strip())
    if not m:
        raise ParseError("header must read '# nx=<int> ny=<int> dx_um=<float> dy_um=<float>'", path, 1)
    try:
        nx, ny = int(m.group(1)), int(m.group(2))
        dx, dy = float(m.group(3)), float(m.group(4))
    except ValueError:
        raise ParseError("malformed header value", path, 1) from None
    if nx < 1 or ny < 1 or not (dx > 0 and dy > 0 and math.isfinite(dx) and math.isfinite(dy)):
        raise ParseError("header sizes and steps must be positive", path, 1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        tokens = s.split()
        if len(tokens) != nx:
            raise ParseError(f"row {len(rows) + 1} has {len(tokens)} values, header declares nx={nx}", path, lineno)
        rows.append(_numbers(tokens, path, lineno))
    if len(rows) != ny:
        raise ParseError(f"found {len(rows)} rows, header declares ny={ny}", path, len(lines))
    try:
        return Heightmap(np.array(rows), dx, dy)
    except ValueError as exc:
        raise ParseError(str(exc), path) from None


# ----------------------------------------------------------------- profiles


def write_profile(path, profile: Profile) -> None:
    lines = [f"# x_um z_um dx_um={profile.dx!r}"]
    lines.extend(f"{fmt(x)} {fmt(z)}" for x, z in zip(profile.x, profile.z))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_profile(path) -> Profile:
    """Two columns, position (um) and height (um), uniformly spaced."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read profile ({exc.strerror})", path) from None
    dx_header = None
    xs, zs = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            m = re.search(r"dx_um=(\S+)", s)
            if m:
                try:
                    dx_header = float(m.group(1))
                except ValueError:
                    raise ParseError("malformed dx_um", path, lineno) from None
            continue
        tokens = s.split()
        if len(tokens) != 2:
            raise ParseError(f"expected 2 columns, found {len(tokens)}", path, lineno)
        x, z = _numbers(tokens, path, lineno)
        xs.append(x)
        zs.append(z)
    if len(xs) < 2:
        raise ParseError("profile needs at least two points", path)
    x = np.array(xs)
    steps = np.diff(x)
    dx = (x[-1] - x[0]) / (len(x) - 1)
    if not dx > 0:
        raise ParseError("positions must increase", path)
    worst = float(np.max(np.abs(steps - dx)))
    tol = 1e-6 * dx + 10.0 ** (1 - SIG) * float(np.max(np.abs(x)))
    if worst > tol:
        i = int(np.argmax(np.abs(steps - dx)))
        raise ParseError(
            f"non-uniform sampling: step deviates from the mean step {dx:.6g} um by up to {worst:.6g} um "
            f"(between points {i + 1} and {i + 2})",
            path,
        )
    if dx_header is not None and abs(dx_header - dx) <= tol:
        dx = dx_header
    try:
        return Profile(np.array(zs), dx)
    except ValueError as exc:
        raise ParseError(str(exc), path) from None


# ----------------------------------------------------------------- reports


@dataclass
class Entry:
    value: float | int | None
    unit: str
    status: str = "ok"


@dataclass
class ParameterReport:
    entries: dict = field(default_factory=dict)  # name -> Entry, insertion ordered
    provenance: dict = field(default_factory=dict)

    def add(self, name: str, value, unit: str, status: str | None = None) -> None:
        if name in self.entries:
            raise ValueError(f"duplicate report key {name!r}")
        if unit is None:
            raise ValueError(f"{name} needs a unit")
        if isinstance(value, Missing):
            self.entries[name] = Entry(None, unit, value.value)
            return
        if value is None or (isinstance(value, float) and not math.isfinite(value)):
            self.entries[name] = Entry(None, unit, "undefined")
            return
        if isinstance(value, (bool, np.bool_)):
            raise TypeError(f"{name}: booleans are not parameters")
        if isinstance(value, (int, np.integer)):
            v = int(value)
        else:
            v = float(value)
            if not math.isfinite(v):
                self.entries[name] = Entry(None, unit, "undefined")
                return
            v = round_sig(v)
        status = status or "ok"
        if status not in STATUSES:
            raise ValueError(f"unknown status {status!r}")
        self.entries[name] = Entry(v, unit, status)

    @classmethod
    def from_values(cls, values: dict, units: dict, provenance: dict | None = None) -> "ParameterReport":
        rep = cls(provenance=dict(provenance or {}))
        for k, v in values.items():
            if k not in units:
                raise KeyError(f"no unit registered for {k!r}")
            rep.add(k, v, units[k])
        return rep

    def value(self, name):
        return self.entries[name].value

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "parameters": {k: {"value": e.value, "unit": e.unit, "status": e.status} for k, e in self.entries.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def to_table(self) -> str:
        rows = [("parameter", "value", "unit", "status")]
        for k, e in self.entries.items():
            v = "-" if e.value is None else (str(e.value) if isinstance(e.value, int) else fmt(e.value))
            rows.append((k, v, e.unit, e.status))
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        out = []
        for r in rows:
            out.append(f"{r[0]:<{widths[0]}}  {r[1]:>{widths[1]}}  {r[2]:<{widths[2]}}  {r[3]}".rstrip())
        return "\n".join(out) + "\n"

    def render(self, form: str = "json") -> str:
        if form == "json":
            return self.to_json()
        if form == "table":
            return self.to_table()
        raise ValueError(f"unknown report format {form!r}")

    @classmethod
    def from_json(cls, text: str, source=None) -> "ParameterReport":
        try:
            data = json.loads(text)
            params = data["parameters"]
            rep = cls(provenance=data.get("provenance", {}))
            for k, e in params.items():
                status = e.get("status", "ok")
                if status not in STATUSES:
                    raise ValueError(f"unknown status {status!r} for {k}")
                value = e["value"]
                if value is not None and not isinstance(value, (int, float)):
                    raise ValueError(f"non-numeric value for {k}")
                rep.entries[k] = Entry(value, e["unit"], status)
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            raise ParseError(f"not a parameter report ({exc})", source) from None
        return rep


def read_report(path) -> ParameterReport:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read report ({exc.strerror})", path) from None
    return ParameterReport.from_json(text, path)


def profile_report(values: dict, provenance: dict | None = None) -> ParameterReport:
    return ParameterReport.from_values(values, PROFILE_UNITS, provenance)


def areal_report(values: dict, provenance: dict | None = None) -> ParameterReport:
    return ParameterReport.from_values(values, AREAL_UNITS, provenance)


# ----------------------------------------------------------------- comparison


@dataclass
class Delta:
    name: str
    unit: str
    a: float | None
    b: float | None
    absolute: float | None  # b - a
    relative: float | None  # (b - a) / |a|
    status: str  # "ok" or the non-ok status that blocked the difference


@dataclass
class Comparison:
    deltas: list
    only_a: list
    only_b: list

    def to_table(self) -> str:
        rows = [("parameter", "unit", "a", "b", "b-a", "(b-a)/|a|", "status")]

        def s(v):
            return "-" if v is None else fmt(v)

        for d in self.deltas:
            rows.append((d.name, d.unit, s(d.a), s(d.b), s(d.absolute), s(d.relative), d.status))
        widths = [max(len(r[i]) for r in rows) for i in range(7)]
        lines = ["  ".join(f"{c:<{w}}" for c, w in zip(r, widths)).rstrip() for r in rows]
        if self.only_a:
            lines.append("only in a: " + ", ".join(self.only_a))
        if self.only_b:
            lines.append("only in b: " + ", ".join(self.only_b))
        return "\n".join(lines) + "\n"


def compare_reports(a: ParameterReport, b: ParameterReport) -> Comparison:
    deltas = []
    for k, ea in a.entries.items():
        eb = b.entries.get(k)
        if eb is None:
            continue
        if ea.unit != eb.unit:
            raise ComparisonError(f"{k}: unit {ea.unit!r} in a but {eb.unit!r} in b")
        if ea.value is None or eb.value is None:
            status = ea.status if ea.value is None else eb.status
            deltas.append(Delta(k, ea.unit, ea.value, eb.value, None, None, status))
            continue
        diff = eb.value - ea.value
        rel = diff / abs(ea.value) if ea.value != 0 else (0.0 if diff == 0 else None)
        deltas.append(Delta(k, ea.unit, ea.value, eb.value, diff, rel, "ok"))
    only_a = [k for k in a.entries if k not in b.entries]
    only_b = [k for k in b.entries if k not in a.entries]
    return Comparison(deltas, only_a, only_b)


# ----------------------------------------------------------------- plot series

SERIES_AXES = {
    "acf": ("lag_um", "acf"),
    "psd": ("wavelength_um", "power_um2"),
    "cumpsd": ("wavelength_um", "cumulated_power_um2"),
    "material-curve": ("material_ratio", "height_um"),
    "slope-increase": ("position_um", "cumulative_rise_um"),
    "slope-decrease": ("position_um", "cumulative_fall_um"),
    "angular-psd": ("angle_deg", "power_um2"),
}


def write_series(path, kind: str, x, y) -> None:
    if kind not in SERIES_AXES:
        raise ValueError(f"unknown series kind {kind!r}")
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.shape != y.shape:
        raise ValueError("series columns differ in length")
    xl, yl = SERIES_AXES[kind]
    lines = [f"# {kind}", f"# {xl} {yl}"]
    lines.extend(f"{fmt(a)} {fmt(b)}" for a, b in zip(x, y))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_series(path):
    data = np.loadtxt(path, comments="#", ndmin=2)
    return data[:, 0], data[:, 1]


def profile_series(extras: dict) -> dict:
    """Plot series of a profile analysis: file stem -> (kind, x, y)."""
    out = {}
    acf = extras.get("acf")
    if acf is not None:
        out["acf"] = ("acf", acf.lags, acf.acf)
    psd = extras.get("psd")
    if psd is not None:
        out["psd"] = ("psd", psd.wavelength, psd.power)
        out["cumpsd"] = ("cumpsd", psd.wavelength, psd.cumulated)
    curve = extras.get("material")
    if curve is not None:
        out["material-curve"] = ("material-curve", curve.ratio, curve.height)
    con = extras.get("conregular")
    if con is not None and con.position is not None:
        out["slope-increase"] = ("slope-increase", con.position, con.rise_increase)
        out["slope-decrease"] = ("slope-decrease", con.position, con.fall_increase)
    return out


def areal_series(extras: dict) -> dict:
    out = {}
    psd = extras.get("psd")
    if psd is not None:
        for axis in ("x", "y"):
            wl = getattr(psd, f"wavelength_{axis}")
            cum = getattr(psd, f"cumulated_{axis}")
            out[f"psd_{axis}"] = ("psd", wl, np.diff(cum, prepend=0.0))
            out[f"cumpsd_{axis}"] = ("cumpsd", wl, cum)
        out["angular-psd"] = ("angular-psd", psd.angles, psd.angular)
    curve = extras.get("material")
    if curve is not None:
        out["material-curve"] = ("material-curve", curve.ratio, curve.height)
    return out


def write_all_series(directory, series: dict) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    for stem in sorted(series):
        kind, x, y = series[stem]
        p = d / f"{stem}.txt"
        write_series(p, kind, x, y)
        written.append(p)
    return written


# ----------------------------------------------------------------- run config

# section -> key -> type; key suffixes carry the unit, counts are unitless
SCHEMA = {
    "gear": {
        "module_mm": float, "teeth": int, "pressure_angle_deg": float, "face_width_mm": float,
        "tip_diameter_mm": float, "root_diameter_mm": float,
    },
    "hob": {
        "pitch_diameter_mm": float, "flutes": int, "starts": int, "fa_mm_per_rev": float,
        "tip_rounding_mm": float, "protuberance": bool,
    },
    "shaper": {"teeth": int, "double_strokes_per_pitch": int, "rotary_feed_mm": float},
    "simulation": {"wheel_step_deg": float, "grid_nu": int, "grid_nv": int, "passes_margin": int, "side": str},
    "analysis": {"form": str, "lc_mm": float, "slope_points": int},
    "measurement": {
        "eccentricity_x_mm": float, "eccentricity_y_mm": float, "probe_diameter_mm": float,
        "eval_start": float, "eval_end": float,
    },
}


@dataclass
class RunConfig:
    values: dict  # section -> key -> typed value
    source: str | None = None

    @classmethod
    def from_text(cls, text: str, source=None) -> "RunConfig":
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(text, source=str(source or "<config>"))
        except configparser.Error as exc:
            raise ConfigError(f"{source or '<config>'}: {exc}") from None
        values = {}
        for section in cp.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]")
            values[section] = {}
            for key, raw in cp.items(section):
                kind = SCHEMA[section].get(key)
                if kind is None:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                try:
                    if kind is bool:
                        v = cp.getboolean(section, key)
                    elif kind is int:
                        v = int(raw)
                    elif kind is float:
                        v = float(raw)
                        if not math.isfinite(v):
                            raise ValueError("not finite")
                    else:
                        v = raw.strip()
                except ValueError:
                    raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {kind.__name__}") from None
                values[section][key] = v
        return cls(values, None if source is None else str(source))

    @classmethod
    def read(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path} ({exc.strerror})") from None
        return cls.from_text(text, path)

    def get(self, section, key, default=None):
        return self.values.get(section, {}).get(key, default)

    def _require(self, section, key):
        v = self.get(section, key)
        if v is None:
            raise ConfigError(f"missing [{section}] {key}")
        return v

    def gear(self) -> GearSpec:
        return GearSpec(
            module_mn=self._require("gear", "module_mm"),
            tooth_count_z2=self._require("gear", "teeth"),
            pressure_angle_an=self.get("gear", "pressure_angle_deg", 20.0),
            face_width=self.get("gear", "face_width_mm", 5.0),
            tip_diameter=self.get("gear", "tip_diameter_mm"),
            root_diameter=self.get("gear", "root_diameter_mm"),
        )

    def hob(self) -> HobSpec:
        return HobSpec(
            pitch_diameter_d0=self._require("hob", "pitch_diameter_mm"),
            flute_count_ni=self._require("hob", "flutes"),
            coil_count_z1=self.get("hob", "starts", 1),
            axial_feed_fa=self.get("hob", "fa_mm_per_rev", 0.0),
            tip_rounding=self.get("hob", "tip_rounding_mm"),
            protuberance_enabled=self.get("hob", "protuberance", False),
        )

    def shaper(self) -> ShaperSpec:
        return ShaperSpec(
            tooth_count_z0=self._require("shaper", "teeth"),
            double_strokes_per_pitch=self._require("shaper", "double_strokes_per_pitch"),
            rotary_feed=self.get("shaper", "rotary_feed_mm", 0.0),
        )

    def generation(self) -> GenerationParams:
        defaults = GenerationParams()
        return GenerationParams(
            wheel_step_dphi=self.get("simulation", "wheel_step_deg"),
            grid_nu=self.get("simulation", "grid_nu", defaults.grid_nu),
            grid_nv=self.get("simulation", "grid_nv", defaults.grid_nv),
            passes_margin=self.get("simulation", "passes_margin", defaults.passes_margin),
        )

    def side(self) -> str:
        side = self.get("simulation", "side", "drive")
        if side not in ("drive", "non-drive"):
            raise ConfigError(f"[simulation] side must be drive or non-drive, got {side!r}")
        return side

    def as_provenance(self) -> dict:
        return {s: dict(sorted(kv.items())) for s, kv in sorted(self.values.items())}


# ----------------------------------------------------------------- deviation inputs


def read_deviation_dir(directory) -> tuple[ToothSet, dict]:
    """Measured wheel from a directory.

    ``gear.ini`` holds [gear] and optional [measurement]; ``flanks.txt`` lists
    ``tooth left_um right_um`` flank position errors along the reference circle;
    optional ``tooth_<i>_left.txt`` / ``tooth_<i>_right.txt`` heightmaps carry
    flank form deviations (rows along the profile, columns along the helix).
    """
    d = Path(directory)
    if not d.is_dir():
        raise ParseError("not a directory", d)
    cfg = RunConfig.read(d / "gear.ini")
    gear = cfg.gear()
    z = gear.tooth_count_z2
    left = np.full(z, np.nan)
    right = np.full(z, np.nan)
    path = d / "flanks.txt"
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read flank positions ({exc.strerror})", path) from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        tokens = s.split()
        if len(tokens) != 3:
            raise ParseError(f"expected 'tooth left_um right_um', found {len(tokens)} columns", path, lineno)
        try:
            i = int(tokens[0])
        except ValueError:
            raise ParseError("tooth index must be an integer", path, lineno) from None
        if not 0 <= i < z:
            raise ParseError(f"tooth index {i} outside 0..{z - 1}", path, lineno)
        if not np.isnan(left[i]):
            raise ParseError(f"tooth {i} listed twice", path, lineno)
        left[i], right[i] = _numbers(tokens[1:], path, lineno)
    missing = np.nonzero(np.isnan(left))[0]
    if len(missing):
        raise ParseError(f"missing flank positions for teeth {missing[:10].tolist()}", path)

    flanks = None
    maps = sorted(d.glob("tooth_*_*.txt"))
    if maps:
        flanks = [[None, None] for _ in range(z)]
        for p in maps:
            m = re.fullmatch(r"tooth_(\d+)_(left|right)\.txt", p.name)
            if not m:
                raise ParseError("flank map names must be tooth_<i>_<left|right>.txt", p)
            i = int(m.group(1))
            if i >= z:
                raise ParseError(f"tooth index {i} outside 0..{z - 1}", p)
            flanks[i][0 if m.group(2) == "left" else 1] = read_heightmap(p).heights
    ecc = (cfg.get("measurement", "eccentricity_x_mm", 0.0), cfg.get("measurement", "eccentricity_y_mm", 0.0))
    ts = ToothSet.from_flank_offsets(gear, left, right, eccentricity=ecc, flanks=flanks)
    options = {
        "probe_diameter": cfg.get("measurement", "probe_diameter_mm"),
        "eval_range": (cfg.get("measurement", "eval_start", 0.05), cfg.get("measurement", "eval_end", 0.95)),
        "config": cfg.as_provenance(),
    }
    return ts, options


def write_deviation_dir(directory, gear: GearSpec, left_um, right_um, measurement: dict | None = None) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    lines = ["[gear]", f"module_mm = {gear.module_mn!r}", f"teeth = {gear.tooth_count_z2}",
             f"pressure_angle_deg = {gear.pressure_angle_an!r}", f"face_width_mm = {gear.face_width!r}"]
    if measurement:
        lines.append("")
        lines.append("[measurement]")
        lines.extend(f"{k} = {v!r}" for k, v in measurement.items())
    (d / "gear.ini").write_text("\n".join(lines) + "\n", encoding="utf-8")
    rows = ["# tooth left_um right_um"]
    rows.extend(f"{i} {fmt(a)} {fmt(b)}" for i, (a, b) in enumerate(zip(left_um, right_um)))
    (d / "flanks.txt").write_text("\n".join(rows) + "\n", encoding="utf-8")
