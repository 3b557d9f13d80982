#!/usr/bin/env python3
"""Run the built-in Monte-Carlo plans and write one CSV per plan."""

import argparse
from pathlib import Path

from nulllab.harness import builtin_plans, run_plan, summarize


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--plans", nargs="*", default=None, help="subset of plan names")
    ap.add_argument("--reps", type=int, default=None, help="override repetitions (quick looks)")
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--outdir", type=Path, default=Path("results"))
    args = ap.parse_args()

    plans = builtin_plans(args.seed)
    names = args.plans or sorted(plans)
    args.outdir.mkdir(parents=True, exist_ok=True)
    for name in names:
        plan = plans[name]
        if args.reps is not None:
            plan = type(plan)(**{**plan.__dict__, "reps": args.reps})
        result = run_plan(plan, threads=args.threads)
        out = args.outdir / f"{name}_seed{args.seed}.csv"
        out.write_text(result.to_csv())
        print(summarize(result))
        print(f"-> {out}\n")


if __name__ == "__main__":
    main()
