"""The twelve acceptance criteria, each printing one PASS/FAIL line."""

import math
import shutil
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES
from hypothesis import given, settings, strategies as st
from oracles import brute_force_secant

from gearflank import io
from gearflank.accuracy import ToothSet, deviation_report, pitch_deviations, runout_Fr
from gearflank.areal import Heightmap, areal_psd_params, volume_params
from gearflank.cli import main
from gearflank.generation import (
    GenerationParams,
    engagement_count,
    extract_profile,
    max_helix_range,
    max_profile_scallop,
    simulate_fellows,
    simulate_hobbing,
)
from gearflank.geometry import GearSpec, HobSpec, ShaperSpec, helix_feed_deviation, profile_scallop_deviation
from gearflank.profile import (
    MaterialRatioCurve,
    Profile,
    acf_analysis,
    amplitude_params,
    fit_reference,
    gaussian_filter,
    kalpha,
    probability_params,
    psd_analysis,
    secant_params,
    slope_params,
    spacing_params,
)

HOB_GEAR = GearSpec(1.814, 86)
HOB = HobSpec(70.0, 14, 1, 2.0)
DPHI = HOB_GEAR.pitch_angle / 14  # 0.299 deg
FEL_GEAR = GearSpec(1.814, 49)
SHAPER = ShaperSpec(56, 55)


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)


@pytest.fixture(scope="module")
def hob_run():
    t = time.perf_counter()
    grid = simulate_hobbing(HOB_GEAR, HOB, GenerationParams(wheel_step_dphi=DPHI, grid_nu=500, grid_nv=500))
    return grid, time.perf_counter() - t


@pytest.fixture(scope="module")
def fellows_grid():
    return simulate_fellows(FEL_GEAR, SHAPER, GenerationParams(grid_nu=500, grid_nv=500))


def test_c01_hobbing_matches_closed_forms(hob_run):
    grid, seconds = hob_run
    dx = helix_feed_deviation(20.0, 70.0, 2.0)
    helix = max_helix_range(grid)
    scallop = max_profile_scallop(grid)
    dy_paper = 0.09
    ok = abs(helix / dx - 1) <= 0.05 and abs(scallop / dy_paper - 1) <= 0.25 and seconds < 60
    record(1, ok, f"helix range {helix:.4f} um vs {dx:.4f} (5%); scallop {scallop:.4f} um vs {dy_paper} (25%; "
           f"closed form {profile_scallop_deviation(1, 1.814, 20.0, 86, 14):.4f}); {seconds:.2f} s at 500x500")
    assert ok


def test_c02_fellows_helix_straight(fellows_grid):
    d = fellows_grid.deviations
    spread = float(np.max(np.ptp(d, axis=1)))
    var = float(np.max(np.mean((d - d[:, :1]) ** 2, axis=1)))
    ok = spread == 0.0 and var == 0.0
    record(2, ok, f"max per-u range along v {spread!r}, variance {var!r}")
    assert ok


def test_c03_engagement_counts(hob_run, fellows_grid):
    hob = engagement_count(hob_run[0])
    fel = engagement_count(fellows_grid)
    ok = abs(hob / 28 - 1) <= 0.2 and abs(fel / 116 - 1) <= 0.2
    record(3, ok, f"hobbing {hob} (28 +-20%), Fellows {fel} (116 +-20%)")
    assert ok


def test_c04_model_anisotropy(hob_run):
    grid = hob_run[0]
    nu, nv = grid.shape
    helix = fit_reference(extract_profile(grid, "along-helix", nu // 2), "line")
    profile = fit_reference(extract_profile(grid, "along-profile", nv // 2), "line")
    pt_h = amplitude_params(helix)["Pt"]
    pt_p = amplitude_params(profile)["Pt"]
    ka = kalpha([amplitude_params(helix)["Pq"] ** 2, amplitude_params(profile)["Pq"] ** 2]).k_alpha
    ok = pt_h / pt_p > 5 and ka > 0.9
    record(4, ok, f"Pt helix {pt_h:.3f} um / Pt profile {pt_p:.3f} um = {pt_h / pt_p:.1f} (>5); Ka {ka:.4f} (>0.9)")
    assert ok


def test_c05_sinusoid_suite():
    A, lam, dx = 1.0, 100.0, 0.1  # 1000 samples per period
    x = np.arange(20000) * dx
    prof = Profile(A * np.sin(2 * np.pi * x / lam), dx)
    t = time.perf_counter()
    amp = amplitude_params(prof)
    sp = spacing_params(prof)
    sl = slope_params(prof, 7)
    seconds = time.perf_counter() - t
    expected = {
        "Pa": 2 * A / math.pi, "Pq": A / math.sqrt(2), "Pt": 2 * A, "Psk": 0.0, "Pku": 1.5,
        "PSm": lam, "PΔq": math.sqrt(2) * math.pi * A / lam, "Pλq": lam,
    }
    got = {**amp, **sp, **sl}
    worst = {}
    for k, v in expected.items():
        worst[k] = abs(got[k]) if v == 0 else abs(got[k] / v - 1)
    ok = all(e <= 0.005 for k, e in worst.items() if k != "Psk") and worst["Psk"] <= 0.005 and seconds < 1
    name = max((k for k in worst if k != "Psk"), key=worst.get)
    record(5, ok, f"worst relative error {worst[name]:.2e} ({name}); |Psk| {worst['Psk']:.1e}; {seconds * 1000:.0f} ms")
    assert ok


def _unrepresentable(z, w, r):
    """True where no doubles near w and r (same binades) can sum to z exactly.

    w + r is then a multiple of the smaller ulp m, which exceeds the ulp of z;
    if z itself is not a multiple of m no rounding can land on it.
    """
    m = np.spacing(np.minimum(np.abs(w), np.abs(r)))
    return np.array([math.fmod(a, b) != 0.0 for a, b in zip(z, m)], dtype=bool)


def test_c06_gaussian_filter():
    def sine(lam, periods):
        x = np.arange(int(round(periods * lam / 0.5))) * 0.5
        return Profile(np.sin(2 * np.pi * x / lam), 0.5)

    _, r1 = gaussian_filter(sine(800.0, 5), 0.8)
    e = r1.edge_samples
    t_cut = np.ptp(r1.z[e:-e]) / 2
    _, r3 = gaussian_filter(sine(800.0 / 3, 15), 0.8)
    t_third = np.ptp(r3.z[r3.edge_samples : -r3.edge_samples]) / 2

    signals = [sine(800.0, 5), sine(800.0 / 3, 15), Profile(np.random.default_rng(0).normal(size=20000), 0.5),
               Profile(np.full(4000, 2.5), 1.0)]
    total = strict_bad = unexplained = 0
    for p in signals:
        w, r = gaussian_filter(p, 0.8)
        bad = np.flatnonzero(w.z + r.z != p.z)
        total += len(p.z)
        strict_bad += len(bad)
        unexplained += int(np.sum(~_unrepresentable(p.z[bad], w.z[bad], r.z[bad])))
    ok = abs(t_cut - 0.5) <= 0.01 and t_third >= 0.995 and unexplained == 0
    record(6, ok, f"transmission {t_cut:.4f} at lc, {t_third:.4f} at lc/3; w+r==z bit-exact on "
           f"{total - strict_bad}/{total} samples, remaining {strict_bad} have no representable split")
    assert ok


def test_c07_spectral_identities():
    rng = np.random.default_rng(1)
    prof = Profile(np.cumsum(rng.normal(size=4096)) * 0.01 + rng.normal(size=4096), 1.0)
    psd = psd_analysis(prof)
    pq2 = amplitude_params(prof)["Pq"] ** 2
    e_prof = abs(psd.total / pq2 - 1)
    acf0 = acf_analysis(prof).acf[0]
    hm = Heightmap(rng.normal(size=(128, 96)), 2.0, 3.0)
    sp = areal_psd_params(hm)
    z = hm.heights - hm.heights.mean()
    e_area = abs(sp.total / np.mean(z**2) - 1)
    mono = bool(np.all(np.diff(psd.cumulated) >= 0) and np.all(np.diff(sp.cumulated_x) >= 0)
                and np.all(np.diff(sp.cumulated_y) >= 0))
    ok = e_prof <= 1e-3 and e_area <= 1e-3 and acf0 == 1.0 and mono
    record(7, ok, f"Parseval profile {e_prof:.1e}, areal {e_area:.1e}; ACF(0)={acf0}; cumulated monotone {mono}")
    assert ok


def test_c08_material_curve():
    rng = np.random.default_rng(5)
    mismatches = 0
    for n in (200, 1001, 4000, 10000):
        z = rng.normal(size=n) + np.where(rng.random(n) < 0.2, -3 * rng.random(n), 0)
        sec = secant_params(MaterialRatioCurve.from_heights(z))
        i, pk, ppk, pvk, mr1, mr2 = brute_force_secant(list(z))
        same = (sec.start == i and math.isclose(sec.Pk, pk, rel_tol=1e-12, abs_tol=1e-12)
                and math.isclose(sec.Mr1, mr1, rel_tol=1e-12, abs_tol=1e-12)
                and math.isclose(sec.Mr2, mr2, rel_tol=1e-12, abs_tol=1e-12)
                and math.isclose(sec.Ppk, ppk, rel_tol=1e-9, abs_tol=1e-12)
                and math.isclose(sec.Pvk, pvk, rel_tol=1e-9, abs_tol=1e-12))
        mismatches += not same
    k = 14000
    strat = np.concatenate([rng.normal(0, 0.1, k), rng.normal(-3, 0.3, 20000 - k)])
    pmq = probability_params(MaterialRatioCurve.from_heights(strat)).Pmq
    ok = mismatches == 0 and abs(pmq - 0.7) <= 0.03
    record(8, ok, f"secant oracle mismatches {mismatches}/4 (same window, values to summation order); "
           f"Pmq {pmq:.4f} for a 0.70 plateau")
    assert ok


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
def test_c09_volume_identity_property(seed, scale):
    z = np.random.default_rng(seed).normal(0, scale, (20, 24))
    v = volume_params(Heightmap(z, 1.0, 1.0))
    assert 1000 * (v["Smmr"] + v["Smvr"]) == pytest.approx(np.ptp(z), rel=1e-12)


def test_c09_volume_identity():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(20):
        z = rng.standard_t(3, (64, 64)) * rng.uniform(0.1, 10)
        v = volume_params(Heightmap(z, 1.0, 1.0))
        worst = max(worst, abs(1000 * (v["Smmr"] + v["Smvr"]) / np.ptp(z) - 1))
    table2 = 1000 * (0.0196 + 0.0222)
    ok = worst < 1e-12 and abs(table2 - 41.8) < 1e-9
    record(9, ok, f"Smmr+Smvr vs St worst relative error {worst:.1e}; 0.0196+0.0222 mm = {table2:.1f} um")
    assert ok


def test_c10_accuracy():
    gear = GearSpec(1.814, 86)
    fr = runout_Fr(ToothSet.nominal(gear, eccentricity=(0.020, 0.0)))
    rng = np.random.default_rng(4)
    pattern = rng.normal(0, 5, 86)
    p = pitch_deviations(ToothSet.from_flank_offsets(gear, pattern, pattern), "left")
    err = float(np.max(np.abs(p["single"] - (np.roll(pattern, -1) - pattern))))
    nominal = deviation_report(ToothSet.nominal(gear)).as_parameters()
    worst_nominal = max(abs(v) for v in nominal.values())
    ok = abs(fr / 40 - 1) <= 0.02 and err < 1e-6 and worst_nominal < 1e-6
    record(10, ok, f"Fr {fr:.3f} um for e=20 um; injected pitch pattern error {err:.1e} um; "
           f"nominal wheel max deviation {worst_nominal:.1e} um")
    assert ok


def test_c11_convergence():
    flat = HobSpec(70.0, 14, 1, 0.0)
    hob = [
        max_profile_scallop(simulate_hobbing(HOB_GEAR, flat, GenerationParams(wheel_step_dphi=DPHI / 2**k, grid_nu=3000, grid_nv=16)))
        for k in range(4)
    ]
    fel = [
        max_profile_scallop(simulate_fellows(FEL_GEAR, ShaperSpec(56, 55 * 2**k), GenerationParams(grid_nu=3000, grid_nv=16)))
        for k in range(4)
    ]
    rh = [hob[k] / hob[k + 1] for k in range(3)]
    rf = [fel[k] / fel[k + 1] for k in range(3)]
    ok = all(3.5 <= r <= 4.5 for r in rh + rf)
    record(11, ok, "halving ratios hobbing " + ", ".join(f"{r:.3f}" for r in rh)
           + "; Fellows " + ", ".join(f"{r:.3f}" for r in rf))
    assert ok


def test_c12_determinism(tmp_path):
    ini = tmp_path / "hob.ini"
    ini.write_text("[gear]\nmodule_mm = 1.814\nteeth = 86\nface_width_mm = 4.0\n\n[hob]\npitch_diameter_mm = 70.0\n"
                   "flutes = 14\nfa_mm_per_rev = 2.0\n\n[simulation]\ngrid_nu = 120\ngrid_nv = 96\n")
    gear = GearSpec(2.0, 20)
    off = np.random.default_rng(2).normal(0, 3, 20)
    io.write_deviation_dir(tmp_path / "wheel", gear, off, -off, {"eccentricity_x_mm": 0.01})

    def pipeline():
        d = tmp_path / "out"
        if d.exists():
            shutil.rmtree(d)
        d.mkdir()
        steps = [
            ["simulate", "--method", "hob", "--config", str(ini), "--out", str(d / "map.txt"), "--report", str(d / "sim.json")],
            ["analyze-areal", "--in", str(d / "map.txt"), "--report", str(d / "areal.json"), "--plots", str(d / "ap")],
            ["analyze-profile", "--in", str(d / "map.txt"), "--from-map", "along-helix", "--report", str(d / "prof.json"),
             "--plots", str(d / "pp")],
            ["deviations", "--in", str(tmp_path / "wheel"), "--report", str(d / "dev.json")],
            ["compare", "--a", str(d / "areal.json"), "--b", str(d / "areal.json"), "--out", str(d / "cmp.txt")],
        ]
        codes = [main(s) for s in steps]
        files = sorted(p for p in d.rglob("*") if p.is_file())
        return codes, {str(p.relative_to(d)): p.read_bytes() for p in files}

    c1, a = pipeline()
    c2, b = pipeline()
    identical = a == b
    ok = c1 == c2 == [0] * 5 and identical and len(a) > 10
    record(12, ok, f"{len(a)} report and series files byte-identical across two runs: {identical}")
    assert ok
