"""Closed-form kinematic estimates against the envelope simulation.

Prints the feed-mark and scallop heights of the reference hobbing setup, the
cutter engagement counts of both methods and the scallop height as the wheel
step is halved repeatedly.
"""

import argparse
import time

from gearflank.generation import (
    GenerationParams,
    engagement_count,
    max_helix_range,
    max_profile_scallop,
    simulate_fellows,
    simulate_hobbing,
)
from gearflank.geometry import GearSpec, HobSpec, ShaperSpec, kinematic_deviation_estimate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, default=500)
    ap.add_argument("--halvings", type=int, default=3)
    args = ap.parse_args()

    gear, hob = GearSpec(1.814, 86), HobSpec(70.0, 14, 1, 2.0)
    est = kinematic_deviation_estimate(gear, hob)
    t = time.perf_counter()
    grid = simulate_hobbing(gear, hob, GenerationParams(grid_nu=args.grid, grid_nv=args.grid))
    dt = time.perf_counter() - t
    print(f"hobbing {args.grid}x{args.grid} in {dt:.2f} s, {len(grid.passes)} passes")
    print(f"  feed marks   simulated {max_helix_range(grid):.4f} um   closed form {est.delta_x:.4f} um")
    print(f"  scallops     simulated {max_profile_scallop(grid):.4f} um   closed form {est.delta_y:.4f} um")
    print(f"  engagements  {engagement_count(grid)} strokes, {engagement_count(grid, by='pass')} passes")

    fgear = GearSpec(1.814, 49)
    fgrid = simulate_fellows(fgear, ShaperSpec(56, 55), GenerationParams(grid_nu=args.grid, grid_nv=64))
    print(f"fellows engagements {engagement_count(fgrid)}")

    print("\nscallop height as the wheel step halves (zero axial feed)")
    flat = HobSpec(70.0, 14, 1, 0.0)
    fine = GenerationParams(grid_nu=3000, grid_nv=16)
    for label, run in (
        ("hobbing", lambda k: simulate_hobbing(gear, flat, GenerationParams(gear.pitch_angle / 14 / 2**k, 3000, 16))),
        ("fellows", lambda k: simulate_fellows(fgear, ShaperSpec(56, 55 * 2**k), fine)),
    ):
        prev = None
        for k in range(args.halvings + 1):
            h = max_profile_scallop(run(k))
            ratio = f"{prev / h:.3f}" if prev else "-"
            print(f"  {label:<8} step/{2**k:<3} scallop {h:.6f} um  ratio {ratio}")
            prev = h


if __name__ == "__main__":
    main()
