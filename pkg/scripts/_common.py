"""Shared argument handling for the experiment scripts."""
import argparse
import sys

from rispeb.runner import BUDGETS, emit
from rispeb.scenario import default_scenario, load_scenario


def parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--scenario", default=None, help="TOML scene (default: built-in scene)")
    p.add_argument("--budget", choices=tuple(BUDGETS), default="quick")
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    return p


def scene(args):
    return default_scenario() if args.scenario is None else load_scenario(args.scenario)


def write(rows, args):
    text = emit(rows, "csv", args.out)
    if args.out is None:
        sys.stdout.write(text)
