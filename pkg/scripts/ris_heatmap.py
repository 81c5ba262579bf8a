"""CPSOA-RM PEB over the UE plane for 1 to 4 RISs; logs the worst cell of each map."""
import logging

from _common import parser, scene, write
from rispeb.runner import ExperimentSpec, axis_scenario, run, worst_cell

if __name__ == "__main__":
    p = parser(__doc__)
    p.add_argument("--grid", default="8x5", help="WxH")
    p.add_argument("--plane-z", type=float, default=1.0)
    p.set_defaults(budget="coarse")
    args = p.parse_args()
    logging.basicConfig(level=logging.WARNING, format="%(message)s")
    w, h = (int(v) for v in args.grid.lower().split("x"))
    rows = []
    for k in (1, 2, 3, 4):
        cells = run(ExperimentSpec(axis_scenario(scene(args), "ris-count", k), mode="heatmap",
                                   grid=(w, h), plane_z=args.plane_z, budget=args.budget,
                                   seeds=tuple(range(args.seeds)), workers=args.workers))
        logging.warning("%d RIS: worst cell %.4g m", k, worst_cell(cells, "CPSOA-RM"))
        rows += cells
    write(rows, args)
