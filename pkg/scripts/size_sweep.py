"""Serial kernels over the default size ladder, producing the size-sweep table.

    python scripts/size_sweep.py --out results/size_sweep --reps 15
"""

import argparse
from pathlib import Path

from matmul_lab.harness import DEFAULT_SIZES, ExperimentPlan, TrialWriter, iter_plan
from matmul_lab.kernels import KernelVariant
from matmul_lab.report import fit_all, render, summarize_trials


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("results/size_sweep"))
    parser.add_argument("--sizes", default=",".join(map(str, DEFAULT_SIZES)))
    parser.add_argument("--reps", type=int, default=15)
    parser.add_argument("--tile", type=int, default=32)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    plan = ExperimentPlan(
        sizes=[(n, n, n) for n in map(int, args.sizes.split(","))],
        variants=[KernelVariant("naive"), KernelVariant("prefetch"),
                  KernelVariant("tiled", tile=args.tile)],
        repetitions=args.reps,
        seed=args.seed,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    records = []
    with TrialWriter(args.out / "trials.csv") as writer:
        for rec in iter_plan(plan):
            writer.write(rec)
            records.append(rec)
            print(f"{rec.size[0]:>5} {str(rec.variant):<10} rep {rec.rep_index:>2} "
                  f"{rec.wall_seconds:.6g} s", flush=True)

    rows = summarize_trials(records)
    fits = fit_all(rows)
    (args.out / "summary.csv").write_text(render(rows, fits, "csv"))
    (args.out / "report.md").write_text(render(rows, fits, "md"))
    for f in fits:
        print(f"{f.variant}: slope {f.slope:.3f} (r^2 {f.r_squared:.4f})")


if __name__ == "__main__":
    main()
