"""Accuracy vs number of partitions on the planted benchmark.

Every run has its L1 weight bisected to the planted sparsity, so the
methods are compared at equal model size. Writes one CSV row per run and
prints the per-(method, p) means.

    python3 scripts/partition_sweep.py --ps 4,16,64 --seeds 10 --out partitions.csv
"""

import argparse
import csv
import dataclasses
import sys

from acowa.aggregate import METHODS
from acowa.experiments import PlantedBenchmark, Trial, mean_accuracy, run_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ps", default="4,16,64")
    ap.add_argument("--methods", default="naive,owa,acowa")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--first-seed", type=int, default=0)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--n-train", type=int, default=PlantedBenchmark.n_train)
    ap.add_argument("--d", type=int, default=PlantedBenchmark.d)
    ap.add_argument("--out", default="partitions.csv")
    args = ap.parse_args()

    methods = args.methods.split(",")
    for m in methods:
        if m not in METHODS:
            ap.error(f"unknown method {m}")
    ps = [int(p) for p in args.ps.split(",")]
    bench = PlantedBenchmark(n_train=args.n_train, d=args.d)
    seeds = range(args.first_seed, args.first_seed + args.seeds)

    names = [f.name for f in dataclasses.fields(Trial)]
    with open(args.out, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(names)

        def progress(t):
            out.writerow([getattr(t, k) for k in names])
            fh.flush()
            print(f"seed {t.seed} p={t.p:<3} {t.method:<20} nnz {t.nnz:<4} acc {t.accuracy:.4f} "
                  f"({t.seconds:.1f}s)", file=sys.stderr)

        trials = run_grid(bench, {p: methods for p in ps}, seeds, args.beta, progress)

    print("method,p,mean_accuracy")
    for m in methods:
        for p in ps:
            print(f"{m},{p},{mean_accuracy(trials, m, p):.4f}")


if __name__ == "__main__":
    main()
