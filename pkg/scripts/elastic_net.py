"""nnz-vs-accuracy curves with an added L2 term.

Sweeps lambda1 for each method at a few lambda2 values on the planted
benchmark and prints the best accuracy reached at or below twice the
planted support size.

    python3 scripts/elastic_net.py --p 16 --lambda2 0,1,10 --seeds 3
"""

import argparse

import numpy as np

from acowa.aggregate import MethodSpec, run_pipeline
from acowa.experiments import PlantedBenchmark
from acowa.objective import accuracy
from acowa.solver import SolverConfig
from acowa.tuning import lambda1_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=16)
    ap.add_argument("--methods", default="naive,owa,acowa")
    ap.add_argument("--lambda2", default="0,1,10")
    ap.add_argument("--count", type=int, default=12)
    ap.add_argument("--seeds", type=int, default=3)
    args = ap.parse_args()

    bench = PlantedBenchmark()
    cap = 2 * bench.informative
    print("method,lambda2,lambda1,mean_nnz,mean_accuracy")
    best = {}
    for seed in range(args.seeds):
        train, test, _ = bench.make(seed)
        grid = lambda1_grid(train, args.count)
        for l2 in (float(x) for x in args.lambda2.split(",")):
            for m in args.methods.split(","):
                for lam in grid:
                    res = run_pipeline(train, MethodSpec(m, args.p, seed=seed),
                                       SolverConfig.relaxed(float(lam), l2))
                    key = (m, l2, float(lam))
                    best.setdefault(key, []).append((res.model.nnz(), accuracy(test, res.model)))
    summary = {}
    for (m, l2, lam), runs in sorted(best.items()):
        nnz, acc = np.mean(runs, axis=0)
        print(f"{m},{l2:g},{lam:.6g},{nnz:.1f},{acc:.4f}")
        if nnz <= cap:
            summary[(m, l2)] = max(summary.get((m, l2), 0.0), acc)
    print(f"\nbest accuracy with mean nnz <= {cap}")
    for (m, l2), acc in sorted(summary.items()):
        print(f"{m:<8} lambda2={l2:<5g} {acc:.4f}")


if __name__ == "__main__":
    main()
