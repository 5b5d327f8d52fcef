"""Choosing the L1 weight: default grids and bisection to a target sparsity."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .aggregate import MethodSpec, PipelineResult, run_pipeline
from .data import SparseDataset
from .objective import Penalty, lambda_max
from .solver import SolverConfig

log = logging.getLogger(__name__)


def lambda1_grid(ds: SparseDataset, count: int = 20, ratio: float = 1e-4,
                 lo: float | None = None, hi: float | None = None) -> np.ndarray:
    """Log-spaced L1 weights; defaults to ``[lambda_max * ratio, lambda_max]``."""
    if count < 1:
        raise ValueError("grid needs at least one point")
    top = hi if hi is not None else lambda_max(ds)
    bottom = lo if lo is not None else top * ratio
    if not (0 < bottom <= top):
        raise ValueError(f"bad lambda1 range [{bottom}, {top}]")
    return np.logspace(math.log10(bottom), math.log10(top), count)


@dataclass
class TuneResult:
    lambda1: float
    nnz: int
    result: PipelineResult
    steps: int
    hit: bool


def tune_lambda1(ds: SparseDataset, spec: MethodSpec, solver_cfg: SolverConfig, target_nnz: int,
                 rel_tol: float = 0.1, max_steps: int = 30, n_threads: int | None = None,
                 start: float | None = None) -> TuneResult:
    """Bisect ``log(lambda1)`` until the final model has ``target_nnz`` nonzeros (within ``rel_tol``).

    The upper end starts at ``lambda_max`` of ``ds`` (or ``start``), where the
    model is empty. If the target is never bracketed within ``max_steps``
    runs the run whose nnz came closest is returned with ``hit=False``.
    """
    pen = solver_cfg.penalty
    slack = rel_tol * target_nnz

    def run(lam):
        cfg = solver_cfg.with_penalty(Penalty(lam, pen.lambda2, pen.feature_scale))
        res = run_pipeline(ds, spec, cfg, n_threads=n_threads)
        return res.model.nnz(), res

    hi = start if start is not None else max(lambda_max(ds), 1e-12)
    best = None
    steps = 0

    def consider(lam, nnz, res):
        nonlocal best
        if best is None or abs(nnz - target_nnz) < abs(best.nnz - target_nnz):
            best = TuneResult(lam, nnz, res, steps, False)
        if abs(nnz - target_nnz) <= slack:
            best = TuneResult(lam, nnz, res, steps, True)
            return True
        return False

    nnz, res = run(hi)
    steps += 1
    if consider(hi, nnz, res):
        return best
    # walk down by decades until the model is dense enough to bracket
    lo = hi
    while nnz < target_nnz and steps < max_steps:
        hi, lo = lo, lo / 10.0
        nnz, res = run(lo)
        steps += 1
        if consider(lo, nnz, res):
            return best
    if nnz < target_nnz:
        log.warning("could not bracket nnz=%d within %d steps", target_nnz, max_steps)
        return best
    while steps < max_steps:
        mid = math.sqrt(lo * hi)
        nnz, res = run(mid)
        steps += 1
        if consider(mid, nnz, res):
            return best
        if nnz > target_nnz:
            lo = mid
        else:
            hi = mid
    log.warning("bisection stopped after %d steps at nnz=%d (target %d)", steps, best.nnz, target_nnz)
    return best
