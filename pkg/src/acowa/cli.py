"""Command line: ``acowa train | sweep | bench``.

Output files
------------
model (train --out)
    One ``idx:value`` line per nonzero coefficient, 1-based feature index,
    value printed with ``repr``. A fitted intercept is written as ``0:value``.
sweep CSV
    ``method,p,lambda1,lambda2,beta,seed,nnz,accuracy,time_total,nnz_std,accuracy_std,status``.
    Per-seed rows leave the ``*_std`` columns empty; rows with ``seed=-1``
    hold the mean (and standard deviation) over the successful seeds.
bench CSV
    ``step,stage,key,seconds`` with one row per pipeline stage.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from .aggregate import METHODS, MERGE_POLICIES, MethodSpec, RunTimings, run_pipeline
from .data import load_libsvm
from .objective import ModelVector, Penalty, accuracy
from .solver import SolverConfig
from .tuning import lambda1_grid, tune_lambda1

log = logging.getLogger("acowa")

SWEEP_FIELDS = ["method", "p", "lambda1", "lambda2", "beta", "seed", "nnz", "accuracy",
                "time_total", "nnz_std", "accuracy_std", "status"]
BENCH_FIELDS = ["step", "stage", "key", "seconds"]


class UsageError(Exception):
    pass


def write_model(model: ModelVector, path: str) -> None:
    with open(path, "w") as fh:
        if model.intercept is not None:
            fh.write(f"0:{float(model.intercept)!r}\n")
        for j in model.support():
            fh.write(f"{j + 1}:{float(model.coefficients[j])!r}\n")


def read_model(path: str, d: int) -> ModelVector:
    w = np.zeros(d)
    b = None
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            k, v = line.split(":")
            if int(k) == 0:
                b = float(v)
            else:
                w[int(k) - 1] = float(v)
    return ModelVector(w, b)


def _num(x) -> str:
    return repr(float(x))


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _load(path: str, dims: int | None = None):
    if not os.path.exists(path):
        raise UsageError(f"no such file: {path}")
    return load_libsvm(path, dims)


def _common(ap: argparse.ArgumentParser, method_list: bool = False) -> None:
    ap.add_argument("--train", required=True, help="training data, LIBSVM format (.gz ok)")
    ap.add_argument("--test", help="held-out data, LIBSVM format")
    if not method_list:
        ap.add_argument("--method", default="acowa", choices=METHODS)
    ap.add_argument("--p", type=int, default=1, help="number of partitions")
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--lambda2", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--merge-policy", default="main_partition", choices=MERGE_POLICIES)
    ap.add_argument("--solver-mode", default="relaxed", choices=("relaxed", "full"))
    ap.add_argument("--dims", type=int, help="feature dimension (default: max index in --train)")


def _spec(args, method=None, beta=None, seed=None) -> MethodSpec:
    return MethodSpec(method or args.method, args.p,
                      beta=args.beta if beta is None else beta,
                      merge_set_policy=args.merge_policy,
                      seed=args.seed if seed is None else seed)


def _data(args):
    train = _load(args.train, args.dims)
    test = _load(args.test, train.n_cols) if args.test else None
    if args.p > train.n_rows:
        raise UsageError(f"--p {args.p} exceeds the {train.n_rows} training rows")
    return train, test


def cmd_train(args) -> int:
    train, test = _data(args)
    cfg = SolverConfig(Penalty(args.lambda1, args.lambda2), mode=args.solver_mode)
    res = run_pipeline(train, _spec(args), cfg)
    if args.out:
        write_model(res.model, args.out)
    print(f"nnz {res.model.nnz()}")
    print(f"train_accuracy {accuracy(train, res.model):.6f}")
    if test is not None:
        print(f"test_accuracy {accuracy(test, res.model):.6f}")
    print(f"time_total {res.timings.total:.6f}")
    return 0


def _lambda1_values(args, train) -> np.ndarray:
    if args.lambda1_grid:
        return np.array(_floats(args.lambda1_grid))
    return lambda1_grid(train, args.lambda1_count, lo=args.lambda1_min, hi=args.lambda1_max)


def cmd_sweep(args) -> int:
    train, test = _data(args)
    evaluate_on = test if test is not None else train
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}")
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    lambdas = _lambda1_values(args, train)
    betas = _floats(args.beta_grid) if args.beta_grid else [args.beta]
    if not len(lambdas) or not betas:
        raise UsageError("empty lambda1 or beta grid")
    seeds = [args.seed + k for k in range(args.seeds)]

    failures = 0
    with open(args.out, "w", newline="") as fh:
        out = csv.DictWriter(fh, SWEEP_FIELDS)
        out.writeheader()
        for method in methods:
            reweights = MethodSpec(method).reweights
            for beta in (betas if reweights else betas[:1]):
                for lam in lambdas:
                    cfg = SolverConfig(Penalty(float(lam), args.lambda2), mode=args.solver_mode)
                    done = []
                    for seed in seeds:
                        row = dict(method=method, p=args.p, lambda1=_num(lam),
                                   lambda2=_num(args.lambda2), beta=_num(beta), seed=seed,
                                   nnz_std="", accuracy_std="")
                        try:
                            res = run_pipeline(train, _spec(args, method, beta, seed), cfg)
                            acc = accuracy(evaluate_on, res.model)
                            row.update(nnz=res.model.nnz(), accuracy=_num(acc),
                                       time_total=_num(res.timings.total), status="ok")
                            done.append((res.model.nnz(), acc, res.timings.total))
                        except Exception as exc:  # recorded, sweep continues
                            log.error("run %s lambda1=%g seed=%d failed: %s", method, lam, seed, exc)
                            row.update(nnz="", accuracy="", time_total="", status=f"failed: {exc}")
                            failures += 1
                        out.writerow(row)
                        fh.flush()
                    agg = dict(method=method, p=args.p, lambda1=_num(lam),
                               lambda2=_num(args.lambda2), beta=_num(beta), seed=-1)
                    if done:
                        a = np.array(done, dtype=float)
                        agg.update(nnz=_num(a[:, 0].mean()), accuracy=_num(a[:, 1].mean()),
                                   time_total=_num(a[:, 2].mean()), nnz_std=_num(a[:, 0].std()),
                                   accuracy_std=_num(a[:, 1].std()), status="ok")
                    else:
                        agg.update(nnz="", accuracy="", time_total="", nnz_std="",
                                   accuracy_std="", status="failed")
                    out.writerow(agg)
                    fh.flush()
    return 0 if failures == 0 else 1


def cmd_bench(args) -> int:
    train, test = _data(args)
    cfg = SolverConfig(Penalty(0.0, args.lambda2), mode=args.solver_mode)
    tuned = tune_lambda1(train, _spec(args), cfg, args.target_nnz, max_steps=30)
    if not tuned.hit:
        print(f"warning: target nnz {args.target_nnz} not reached; nearest nnz {tuned.nnz}",
              file=sys.stderr)
    timed = [tuned.result.timings]
    run_cfg = cfg.with_penalty(Penalty(tuned.lambda1, args.lambda2))
    for k in range(1, args.trials):
        timed.append(run_pipeline(train, _spec(args, seed=args.seed + k), run_cfg).timings)
    with open(args.out, "w", newline="") as fh:
        out = csv.DictWriter(fh, BENCH_FIELDS)
        out.writeheader()
        for step, (key, label, _) in enumerate(RunTimings().rows(), start=1):
            secs = float(np.mean([getattr(t, key) for t in timed]))
            out.writerow(dict(step=step, stage=label, key=key, seconds=_num(secs)))
    print(f"lambda1 {tuned.lambda1!r}")
    print(f"nnz {tuned.nnz}")
    if test is not None:
        print(f"test_accuracy {accuracy(test, tuned.result.model):.6f}")
    print(f"time_total {float(np.mean([t.total for t in timed])):.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="acowa", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="train one model")
    _common(tr)
    tr.add_argument("--lambda1", type=float, required=True)
    tr.add_argument("--out", help="model output path")
    tr.set_defaults(func=cmd_train)

    sw = sub.add_parser("sweep", help="accuracy/nnz over a lambda1 grid and seeds")
    _common(sw, method_list=True)
    sw.add_argument("--methods", default="naive,owa,acowa")
    sw.add_argument("--seeds", type=int, default=10, help="number of seeds, starting at --seed")
    sw.add_argument("--lambda1-grid", help="comma-separated lambda1 values")
    sw.add_argument("--lambda1-min", type=float)
    sw.add_argument("--lambda1-max", type=float)
    sw.add_argument("--lambda1-count", type=int, default=20)
    sw.add_argument("--beta-grid", help="comma-separated beta values (reweighting methods)")
    sw.add_argument("--out", required=True)
    sw.set_defaults(func=cmd_sweep)

    be = sub.add_parser("bench", help="stage timings at a tuned sparsity")
    _common(be)
    be.add_argument("--target-nnz", type=int, default=1000)
    be.add_argument("--trials", type=int, default=1)
    be.add_argument("--out", required=True)
    be.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
