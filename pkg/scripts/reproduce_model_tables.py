"""Profile and areal parameters of the simulated hobbed and shaped flanks.

Writes one JSON report per method and direction plus the areal reports and
their plot series, and prints the helix/profile comparison of the model.
"""

import argparse
from pathlib import Path

from gearflank import io
from gearflank.areal import Heightmap, areal_parameters, remove_form_areal
from gearflank.generation import GenerationParams, extract_profile, simulate_fellows, simulate_hobbing
from gearflank.geometry import GearSpec, HobSpec, ShaperSpec
from gearflank.profile import fit_reference, profile_parameters


def analyse(name, grid, out: Path):
    nu, nv = grid.shape
    helix = fit_reference(extract_profile(grid, "along-helix", nu // 2), "line")
    profile = fit_reference(extract_profile(grid, "along-profile", nv // 2), "line")
    reports = {}
    for direction, trace, other in (("helix", helix, profile), ("profile", profile, helix)):
        values, extras = profile_parameters(trace, kalpha_with=other)
        rep = io.profile_report(values, {"model": name, "direction": direction})
        (out / f"{name}_{direction}.json").write_text(rep.to_json(), encoding="utf-8")
        io.write_all_series(out / f"{name}_{direction}_series", io.profile_series(extras))
        reports[direction] = rep
    hm = remove_form_areal(Heightmap.from_grid(grid), "plane")
    values, extras = areal_parameters(hm)
    areal = io.areal_report(values, {"model": name})
    (out / f"{name}_areal.json").write_text(areal.to_json(), encoding="utf-8")
    io.write_all_series(out / f"{name}_areal_series", io.areal_series(extras))
    return reports, areal


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/model_tables")
    ap.add_argument("--grid", type=int, default=500, help="samples per flank direction")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = GenerationParams(grid_nu=args.grid, grid_nv=args.grid)

    hob = simulate_hobbing(GearSpec(1.814, 86), HobSpec(70.0, 14, 1, 2.0), params)
    fel = simulate_fellows(GearSpec(1.814, 49), ShaperSpec(56, 55), params)
    keys = ("Pa", "Pq", "Pt", "Psk", "Pku", "PSm", "PΔq", "Pk", "Ppk", "Pvk", "Kα")
    for name, grid in (("hobbing", hob), ("fellows", fel)):
        reports, areal = analyse(name, grid, out)
        print(f"\n{name}")
        print(f"{'param':<6} {'helix':>12} {'profile':>12}")
        for k in keys:
            row = []
            for d in ("helix", "profile"):
                e = reports[d].entries[k]
                row.append(f"{e.value:12.5g}" if e.value is not None else f"{e.status:>12}")
            print(f"{k:<6} {row[0]} {row[1]}")
        ph, pp = reports["helix"].value("Pt"), reports["profile"].value("Pt")
        ratio = ph / pp if pp else float("inf")
        print(f"Pt helix / Pt profile = {ratio:.3g}; St = {areal.value('St'):.4g} um; Str = {areal.value('Str'):.3g}")
    print(f"\nreports written to {out}")


if __name__ == "__main__":
    main()
