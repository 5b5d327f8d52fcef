"""ACOWA accuracy across the feature-weight strength beta.

Uses the planted benchmark at fixed sparsity; beta=0 turns the second
round into a plain repeat of the first.

    python3 scripts/beta_sweep.py --p 64 --betas 0,0.5,1,2,4,8 --seeds 5
"""

import argparse

import numpy as np

from acowa.experiments import PlantedBenchmark, fixed_sparsity_trial


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=64)
    ap.add_argument("--betas", default="0,0.5,1,2,4,8")
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    bench = PlantedBenchmark()
    betas = [float(b) for b in args.betas.split(",")]
    acc = {b: [] for b in betas}
    for seed in range(args.seeds):
        train, test, _ = bench.make(seed)
        for b in betas:
            t = fixed_sparsity_trial(train, test, "acowa", args.p, seed, bench.target_nnz, beta=b)
            acc[b].append(t.accuracy)
            print(f"seed {seed} beta {b:g}: acc {t.accuracy:.4f} nnz {t.nnz}", flush=True)
    print("beta,mean_accuracy,std")
    for b in betas:
        print(f"{b:g},{np.mean(acc[b]):.4f},{np.std(acc[b]):.4f}")


if __name__ == "__main__":
    main()
