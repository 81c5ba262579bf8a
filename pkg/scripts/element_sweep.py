"""PEB versus panel size (K x K elements per RIS)."""
from _common import parser, scene, write
from rispeb.runner import ExperimentSpec, run

if __name__ == "__main__":
    p = parser(__doc__)
    p.add_argument("--values", default="4,6,8,10,12", help="elements per side")
    args = p.parse_args()
    rows = run(ExperimentSpec(scene(args), mode="sweep", axis="elements",
                              values=tuple(float(v) for v in args.values.split(",")),
                              methods=("CPSOA-RM", "EBS"), seeds=tuple(range(args.seeds)),
                              budget=args.budget, workers=args.workers))
    write(rows, args)
