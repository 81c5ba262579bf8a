"""PEB versus AP transmit power for CPSOA-RM, EBS and random phases."""
from _common import parser, scene, write
from rispeb.runner import ExperimentSpec, run

if __name__ == "__main__":
    p = parser(__doc__)
    p.add_argument("--values", default="-10,-5,0,5,10,15,20", help="powers in dBm")
    args = p.parse_args()
    rows = run(ExperimentSpec(scene(args), mode="sweep", axis="power",
                              values=tuple(float(v) for v in args.values.split(",")),
                              seeds=tuple(range(args.seeds)), budget=args.budget,
                              workers=args.workers))
    write(rows, args)
