"""Command-line entry point: simulate, analyze-profile, analyze-areal, deviations, compare."""

from __future__ import annotations

import argparse
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import io
from .accuracy import deviation_report
from .areal import Heightmap, areal_parameters, gaussian_filter_areal, remove_form_areal
from .errors import (
    ConfigError,
    GearFlankError,
    InvalidFeedError,
    InvalidGeometryError,
    InvalidParamsError,
    ParseError,
)
from .generation import engagement_count, max_helix_range, max_profile_scallop, simulate
from .profile import Profile, fit_reference, gaussian_filter, profile_parameters

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_ANALYSIS = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise UsageError(message)


def _version() -> str:
    try:
        return metadata.version("gearflank")
    except metadata.PackageNotFoundError:
        return "unknown"


def _provenance(command: str, inputs: dict, settings: dict) -> dict:
    return {
        "command": command,
        "inputs": {k: str(v) for k, v in inputs.items() if v is not None},
        "settings": settings,
        "versions": {"gearflank": _version(), "numpy": np.__version__},
    }


def _emit(report: io.ParameterReport, path, form: str) -> None:
    text = report.render(form)
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# ----------------------------------------------------------------- commands


def cmd_simulate(args) -> int:
    cfg = io.RunConfig.read(args.config)
    gear = cfg.gear()
    tool = cfg.hob() if args.method == "hob" else cfg.shaper()
    grid = simulate(gear, tool, cfg.generation(), cfg.side())
    io.write_heightmap(args.out, Heightmap.from_grid(grid))
    if args.report:
        rep = io.ParameterReport(provenance=_provenance("simulate", {"config": args.config}, {
            "method": args.method, "config": cfg.as_provenance()}))
        rep.add("engagements", engagement_count(grid), "1")
        rep.add("profile scallop", max_profile_scallop(grid), "um")
        rep.add("helix range", max_helix_range(grid), "um")
        rep.add("passes", len(grid.passes), "1")
        _emit(rep, args.report, args.format)
    return EXIT_OK


def _load_trace(path, from_map, form):
    if from_map is None:
        return fit_reference(io.read_profile(path), form)
    hm = io.read_heightmap(path)
    # rows run along the profile, columns along the helix
    if from_map == "along-profile":
        prof = Profile(hm.heights[:, hm.nx // 2], hm.dy)
    else:
        prof = Profile(hm.heights[hm.ny // 2, :], hm.dx)
    return fit_reference(prof, form)


def cmd_analyze_profile(args) -> int:
    prof = _load_trace(args.input, args.from_map, args.form)
    if args.lc is not None:
        _, prof = gaussian_filter(prof, args.lc)
    other = None
    if args.other is not None:
        other = _load_trace(args.other, args.from_map, args.form)
    elif args.from_map is not None:
        across = "along-helix" if args.from_map == "along-profile" else "along-profile"
        other = _load_trace(args.input, across, args.form)
    if other is not None and args.lc is not None:
        _, other = gaussian_filter(other, args.lc)
    values, extras = profile_parameters(prof, slope_points=args.slope_points, kalpha_with=other)
    settings = {"form": args.form, "lc_mm": args.lc, "slope_points": args.slope_points, "from_map": args.from_map}
    rep = io.profile_report(values, _provenance("analyze-profile", {"in": args.input, "other": args.other}, settings))
    _emit(rep, args.report, args.format)
    if args.plots:
        io.write_all_series(args.plots, io.profile_series(extras))
    return EXIT_OK


def cmd_analyze_areal(args) -> int:
    hm = remove_form_areal(io.read_heightmap(args.input), args.form)
    if args.lc is not None:
        _, hm = gaussian_filter_areal(hm, args.lc)
    values, extras = areal_parameters(hm)
    settings = {"form": args.form, "lc_mm": args.lc}
    rep = io.areal_report(values, _provenance("analyze-areal", {"in": args.input}, settings))
    _emit(rep, args.report, args.format)
    if args.plots:
        io.write_all_series(args.plots, io.areal_series(extras))
    return EXIT_OK


def cmd_deviations(args) -> int:
    teeth, opts = io.read_deviation_dir(args.input)
    dev = deviation_report(teeth, opts["probe_diameter"], opts["eval_range"])
    rep = io.ParameterReport(provenance=_provenance("deviations", {"in": args.input}, {"config": opts["config"]}))
    for k, v in dev.as_parameters().items():
        rep.add(k, v, "um")
    _emit(rep, args.report, args.format)
    return EXIT_OK


def cmd_compare(args) -> int:
    cmp = io.compare_reports(io.read_report(args.a), io.read_report(args.b))
    text = cmp.to_table()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gearflank", description="Virtual gear generation and flank surface metrology.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="generate a flank grid and write it as a heightmap")
    s.add_argument("--method", choices=("hob", "fellows"), required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--report", help="also write a run summary (engagements, scallop, helix range)")
    s.add_argument("--format", choices=("json", "table"), default="json")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("analyze-profile", help="profile (P) parameters of a trace")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--form", choices=("line", "poly5", "circle"), default="line")
    s.add_argument("--lc", type=float, help="Gaussian cut-off in mm; the roughness profile is analysed")
    s.add_argument("--report")
    s.add_argument("--plots", help="directory for plot series")
    s.add_argument("--other", help="second trace, taken across the first, for the anisotropy ratio")
    s.add_argument("--from-map", choices=("along-profile", "along-helix"),
                   help="read --in as a heightmap and take its middle trace in this direction")
    s.add_argument("--slope-points", type=int, choices=(3, 5, 7), default=7)
    s.add_argument("--format", choices=("json", "table"), default="json")
    s.set_defaults(func=cmd_analyze_profile)

    s = sub.add_parser("analyze-areal", help="areal (S) parameters of a heightmap")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--form", choices=("plane", "poly2", "poly5"), default="plane")
    s.add_argument("--lc", type=float, help="Gaussian cut-off in mm; the roughness surface is analysed")
    s.add_argument("--report")
    s.add_argument("--plots")
    s.add_argument("--format", choices=("json", "table"), default="json")
    s.set_defaults(func=cmd_analyze_areal)

    s = sub.add_parser("deviations", help="pitch, runout, thickness and form deviations of a measured wheel")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--report")
    s.add_argument("--format", choices=("json", "table"), default="json")
    s.set_defaults(func=cmd_deviations)

    s = sub.add_parser("compare", help="difference table of two JSON reports")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ParseError, ConfigError, InvalidGeometryError, InvalidFeedError, InvalidParamsError, OSError) as exc:
        print(f"gearflank: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GearFlankError, ValueError, ArithmeticError) as exc:
        print(f"gearflank: analysis failed: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
