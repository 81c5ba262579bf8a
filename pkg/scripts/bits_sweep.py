"""PEB versus phase resolution for DPSOA-I-GWO and nearest-state EBS."""
from _common import parser, scene, write
from rispeb.runner import ExperimentSpec, run

if __name__ == "__main__":
    p = parser(__doc__)
    p.add_argument("--values", default="1,2,3,4")
    args = p.parse_args()
    rows = run(ExperimentSpec(scene(args), mode="sweep", axis="bits",
                              values=tuple(float(v) for v in args.values.split(",")),
                              seeds=tuple(range(args.seeds)), budget=args.budget,
                              workers=args.workers))
    write(rows, args)
