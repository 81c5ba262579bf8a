"""DPSOA-I-GWO against nearest-state EBS on 10x10 panels with 2-bit phases.

At the full budget (T = 1000, M = 100) each seed takes one to two minutes
on one core; the summary line goes to stderr.
"""
import logging
import statistics
from dataclasses import replace

from _common import parser, scene, write
from rispeb.runner import ExperimentSpec, run

if __name__ == "__main__":
    p = parser(__doc__)
    p.add_argument("--bits", type=int, default=2)
    p.set_defaults(budget="full", seeds=5)
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    base = scene(args)
    if args.scenario is None:
        base = base.with_panels([replace(q, rows=10, cols=10) for q in base.ris_panels])
    rows = run(ExperimentSpec(base, mode="optimize-discrete", bits=args.bits,
                              seeds=tuple(range(args.seeds)), budget=args.budget,
                              workers=args.workers))
    gwo = statistics.median(r.peb_m for r in rows if r.method == "DPSOA-I-GWO")
    ref = statistics.median(r.peb_m for r in rows if r.method == "discrete-EBS")
    logging.warning("median DPSOA-I-GWO %.4g m, discrete-EBS %.4g m, ratio %.2f", gwo, ref, ref / gwo)
    write(rows, args)
