"""Parallel kernel at one size across worker counts, with speedup and efficiency.

    python scripts/thread_sweep.py --size 1024 --threads 1,2,4,8,16
"""

import argparse
import os
from pathlib import Path

from matmul_lab.harness import THREAD_SWEEP, ExperimentPlan, TrialWriter, iter_plan
from matmul_lab.kernels import KernelVariant
from matmul_lab.report import render, summarize_trials


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path("results/thread_sweep"))
    parser.add_argument("--size", type=int, default=1024)
    parser.add_argument("--threads", default=",".join(map(str, THREAD_SWEEP)))
    parser.add_argument("--reps", type=int, default=15)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    n = args.size
    plan = ExperimentPlan(
        sizes=[(n, n, n)],
        variants=[KernelVariant("parallel", workers=w) for w in map(int, args.threads.split(","))],
        repetitions=args.reps,
        seed=args.seed,
    )
    print(f"host reports {os.cpu_count()} logical CPUs")
    args.out.mkdir(parents=True, exist_ok=True)
    with TrialWriter(args.out / "trials.csv") as writer:
        records = []
        for rec in iter_plan(plan):
            writer.write(rec)
            records.append(rec)
    rows = summarize_trials(records)
    (args.out / "report.md").write_text(render(rows, fmt="md"))
    for r in rows:
        print(f"workers {r.variant.workers:>2}: {r.summary.mean:.4g} s "
              f"(+/- {r.summary.ci95_half_width:.2g}), speedup {r.speedup:.2f}, "
              f"efficiency {r.efficiency:.2f}")


if __name__ == "__main__":
    main()
