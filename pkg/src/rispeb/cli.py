"""Command line entry point: ``rispeb <subcommand> [options]``.

Exit codes: 0 success, 2 invalid input, 3 when every cell is degenerate.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .runner import (AXES, BUDGETS, METHODS, DegenerateEverywhereError, ExperimentSpec, emit,
                     run)
from .scenario import ScenarioError, default_scenario, load_scenario, named_preset

EXIT_OK, EXIT_INVALID, EXIT_DEGENERATE = 0, 2, 3

SUBCOMMANDS = {
    "eval": "eval",
    "opt-cont": "optimize-continuous",
    "opt-disc": "optimize-discrete",
    "sweep": "sweep",
    "heatmap": "heatmap",
}


class ArgumentError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


def _grid(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like WxH, got {text!r}") from None


def _values(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"values must be comma-separated numbers, got {text!r}") from None


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rispeb", description="RIS-aided positioning error bound experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, mode in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"{mode} run")
        p.add_argument("--scenario", default="default",
                       help="TOML scene file or preset name (default, scenarioA, scenarioB-a, "
                            "scenarioB-b, ris1..ris4)")
        p.add_argument("--seed", type=_seed, default=None, help="first seed (default: scene seed)")
        p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
        p.add_argument("--axis", choices=AXES, default=None)
        p.add_argument("--values", type=_values, default=())
        p.add_argument("--bits", type=int, default=2, help="phase resolution N_B")
        p.add_argument("--methods", default=None,
                       help=f"comma-separated subset of {', '.join(METHODS)}")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--grid", type=_grid, default=(40, 25), help="heatmap resolution WxH")
        p.add_argument("--plane-z", type=float, default=1.0, help="heatmap plane height (m)")
        p.add_argument("--budget", choices=tuple(BUDGETS), default="full")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("-v", "--verbose", action="store_true", help="log one line per cell")
        p.add_argument("--no-timing", action="store_true",
                       help="write wall_ms = 0 so repeated runs are byte-identical")
        p.set_defaults(mode=mode)
    return parser


def _load(source: str):
    if source.endswith(".toml"):
        return load_scenario(source)
    if source == "default":
        return default_scenario()
    return named_preset(source)


def spec_from_args(args) -> ExperimentSpec:
    scenario = _load(args.scenario)
    if args.seeds < 1:
        raise ScenarioError("seeds", "must be at least 1")
    first = scenario.rng_seed if args.seed is None else args.seed
    methods = None
    if args.methods:
        methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    return ExperimentSpec(
        scenario=scenario, mode=args.mode, axis=args.axis, values=tuple(args.values),
        methods=methods, seeds=tuple(first + k for k in range(args.seeds)), bits=args.bits,
        grid=args.grid, plane_z=args.plane_z, budget=args.budget, workers=args.workers,
        record_timing=not args.no_timing, output=args.out)


def _glue_values(argv: list[str]) -> list[str]:
    # "--values -10,-5" would otherwise read -10,-5 as an option
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--values" and i + 1 < len(argv):
            out.append(f"--values={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    argv = _glue_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = build_parser().parse_args(argv)
    except ArgumentError as exc:
        print(f"rispeb: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = spec_from_args(args)
        rows = run(spec)
    except (ScenarioError, FileNotFoundError) as exc:
        print(f"rispeb: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except DegenerateEverywhereError as exc:
        print(f"rispeb: degenerate scenario: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    try:
        text = emit(rows, args.format, spec.output)
    except OSError as exc:
        print(f"rispeb: cannot write {spec.output}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if spec.output is None:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
