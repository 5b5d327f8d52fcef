"""Desk-scale planted-model benchmark shared by the scripts and the acceptance tests.

Methods are compared at a fixed sparsity: for every (method, p, seed) the
L1 weight is bisected until the final model has ``target_nnz`` nonzeros,
then accuracy is measured on held-out rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregate import MethodSpec
from .data import SparseDataset, synth_sparse
from .objective import accuracy
from .solver import SolverConfig
from .tuning import tune_lambda1


@dataclass(frozen=True)
class PlantedBenchmark:
    n_train: int = 20000
    n_test: int = 5000
    d: int = 500
    informative: int = 20
    density: float = 0.2
    noise: float = 0.1
    target_nnz: int = 20

    def make(self, seed: int) -> tuple[SparseDataset, SparseDataset, np.ndarray]:
        planted = synth_sparse(self.n_train + self.n_test, self.d, self.density,
                               self.informative, seed=10_000 + seed, noise=self.noise)
        ds = planted.dataset
        return (ds.rows(np.arange(self.n_train)),
                ds.rows(np.arange(self.n_train, self.n_train + self.n_test)),
                planted.w_star)


@dataclass(frozen=True)
class Trial:
    method: str
    p: int
    seed: int
    lambda1: float
    nnz: int
    accuracy: float
    hit: bool
    seconds: float


def fixed_sparsity_trial(train: SparseDataset, test: SparseDataset, method: str, p: int,
                         seed: int, target_nnz: int, beta: float = 1.0,
                         solver_cfg: SolverConfig | None = None) -> Trial:
    cfg = solver_cfg or SolverConfig.relaxed()
    tuned = tune_lambda1(train, MethodSpec(method, p, beta=beta, seed=seed), cfg, target_nnz)
    res = tuned.result
    return Trial(method, p, seed, tuned.lambda1, tuned.nnz, accuracy(test, res.model),
                 tuned.hit, res.timings.total)


def run_grid(bench: PlantedBenchmark, plan: dict[int, list[str]], seeds, beta: float = 1.0,
             progress=None) -> list[Trial]:
    """``plan`` maps p to the methods to run at that p."""
    trials = []
    for seed in seeds:
        train, test, _ = bench.make(seed)
        for p, methods in plan.items():
            for m in methods:
                t = fixed_sparsity_trial(train, test, m, p, seed, bench.target_nnz, beta)
                trials.append(t)
                if progress:
                    progress(t)
    return trials


def mean_accuracy(trials: list[Trial], method: str, p: int) -> float:
    acc = [t.accuracy for t in trials if t.method == method and t.p == p]
    return float(np.mean(acc)) if acc else float("nan")
