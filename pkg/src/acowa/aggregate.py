"""Distributed estimators: naive averaging, OWA and ACOWA with its ablations."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, fields
from typing import NamedTuple

import numpy as np

from . import comm
from .centroid import augment_partition, compute_centroids
from .data import DimensionError, SparseDataset, merge_set_size, partition, subsample
from .objective import ModelVector, Penalty, log1pexp
from .solver import SolverConfig, solve_glmnet

log = logging.getLogger(__name__)

METHODS = ("naive", "owa", "acowa", "acowa_centroid_only", "acowa_fw_only")
MERGE_POLICIES = ("paper_min", "main_partition")
DEFAULT_CV_GRID = tuple(np.logspace(-4, 2, 10).tolist())


class PipelineAborted(RuntimeError):
    def __init__(self, stage: str, timings: "RunTimings", cause: BaseException):
        super().__init__(f"pipeline aborted during {stage}: {cause}")
        self.stage = stage
        self.timings = timings
        self.cause = cause


@dataclass(frozen=True, eq=False)
class ModelMatrix:
    """``d x p`` matrix whose columns are per-partition models."""

    columns: np.ndarray
    source_round: str = "round1"

    def __post_init__(self):
        c = np.asarray(self.columns, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] < 1:
            raise ValueError("ModelMatrix needs a d x p array with p >= 1")
        object.__setattr__(self, "columns", c)

    @classmethod
    def from_models(cls, models: list[ModelVector], source_round: str = "round1") -> "ModelMatrix":
        ds = {m.d for m in models}
        if len(ds) != 1:
            raise DimensionError(f"models disagree on d: {sorted(ds)}")
        return cls(np.column_stack([m.coefficients for m in models]), source_round)

    @property
    def d(self) -> int:
        return self.columns.shape[0]

    @property
    def p(self) -> int:
        return self.columns.shape[1]


@dataclass(frozen=True, eq=False)
class FeatureWeights:
    alpha: np.ndarray
    beta: float
    support_fraction: np.ndarray


@dataclass
class RunTimings:
    """Wall-clock seconds per pipeline stage."""

    centroids: float = 0.0
    all_to_all: float = 0.0
    round1: float = 0.0
    gather1: float = 0.0
    alpha: float = 0.0
    round2: float = 0.0
    gather2: float = 0.0
    merge: float = 0.0
    total: float = 0.0

    # display names of the stages, in run order
    LABELS = (
        ("centroids", "Centroids"), ("all_to_all", "All-to-all"), ("round1", "Round 1"),
        ("gather1", "Model gather"), ("alpha", "Compute α"), ("round2", "Round 2"),
        ("gather2", "Model gather"), ("merge", "Round 3"), ("total", "Total"),
    )

    def rows(self) -> list[tuple[str, str, float]]:
        return [(key, label, getattr(self, key)) for key, label in self.LABELS]

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class MethodSpec:
    method: str = "acowa"
    p: int = 1
    beta: float = 1.0
    lambda_cv_grid: tuple = DEFAULT_CV_GRID
    cv_folds: int = 5
    merge_set_policy: str = "main_partition"
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if len(self.lambda_cv_grid) == 0 or min(self.lambda_cv_grid) < 0:
            raise ValueError("lambda_cv_grid must be a nonempty list of nonnegative values")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")
        if self.merge_set_policy not in MERGE_POLICIES:
            raise ValueError(f"unknown merge policy {self.merge_set_policy!r}")
        object.__setattr__(self, "lambda_cv_grid", tuple(float(x) for x in self.lambda_cv_grid))

    @property
    def augments(self) -> bool:
        return self.method in ("acowa", "acowa_centroid_only")

    @property
    def reweights(self) -> bool:
        return self.method in ("acowa", "acowa_fw_only")


def naive_average(models: ModelMatrix) -> ModelVector:
    return ModelVector(models.columns.mean(axis=1))


def project_models(merge_set: SparseDataset, W: ModelMatrix) -> np.ndarray:
    """``X_C W``: activation of every model on every merge-set row."""
    if W.d != merge_set.n_cols:
        raise DimensionError(f"models have d={W.d}, merge set has d={merge_set.n_cols}")
    X = merge_set.to_csr()
    return np.column_stack([X @ W.columns[:, j] for j in range(W.p)])


def compute_feature_weights(models: ModelMatrix, beta: float) -> FeatureWeights:
    support = np.count_nonzero(models.columns, axis=1) / models.p
    return FeatureWeights(1.0 + beta * support, float(beta), support)


def _merge_cfg(lam: float) -> SolverConfig:
    # relative-decrease stopping is plenty for ranking lambda_cv; near-separable
    # merge sets make an absolute gradient test needlessly slow
    return SolverConfig(Penalty(0.0, lam), mode="full", kkt_tol=0.0)


def _mean_loss(ds: SparseDataset, v: np.ndarray) -> float:
    z = ds.to_csr() @ v
    return float(ds.row_weights @ log1pexp(-ds.labels * z) / ds.row_weights.sum())


def _rotated(Z: np.ndarray):
    """Orthogonal-column basis for the projected problem.

    With ``Z = U S V'`` and ``v = V u`` the loss sees ``Z v = (U S) u`` and
    ``|v| = |u|``, so the merge objective is unchanged, but coordinate
    descent no longer fights nearly collinear models.
    """
    _, s, vt = np.linalg.svd(Z, full_matrices=False)
    keep = s > s[0] * 1e-12 if len(s) and s[0] > 0 else np.zeros(len(s), dtype=bool)
    V = vt[keep].T
    return Z @ V, V


def _fit_path(proj: SparseDataset, grid: list[float]) -> list[np.ndarray]:
    """Solutions for every ``lambda_cv`` in ``grid``, warm-started from the largest."""
    out = [None] * len(grid)
    warm = None
    for k in range(len(grid) - 1, -1, -1):
        warm = solve_glmnet(proj, _merge_cfg(grid[k]), warm).model
        out[k] = warm.coefficients
    return out


def owa_merge(merge_set: SparseDataset, W: ModelMatrix, lambda_cv_grid=DEFAULT_CV_GRID,
              cv_folds: int = 5, seed=None) -> tuple[ModelVector, float]:
    """Fit combination weights ``v`` on the merge set and return ``W v``.

    ``lambda_cv`` is picked by ``cv_folds``-fold cross-validation of the
    mean held-out logistic loss; ties go to the smaller value. Folds whose
    training part holds a single class are skipped. If every fold is
    skipped the middle grid value is used without CV.
    """
    if merge_set.n_rows == 0:
        raise ValueError("merge set is empty")
    grid = sorted(float(x) for x in lambda_cv_grid)
    if not grid:
        raise ValueError("lambda_cv grid is empty")
    Zr, V = _rotated(project_models(merge_set, W))
    if V.shape[1] == 0:
        return ModelVector(np.zeros(W.d)), grid[0]
    proj = SparseDataset.from_matrix(Zr, merge_set.labels, merge_set.row_weights, n_cols=V.shape[1])

    chosen = None
    if len(grid) == 1:
        chosen = grid[0]
    elif proj.n_rows >= cv_folds:
        rng = np.random.default_rng(seed)
        folds = np.array_split(rng.permutation(proj.n_rows), cv_folds)
        scores = []
        for k in range(cv_folds):
            train = np.sort(np.concatenate([f for i, f in enumerate(folds) if i != k]))
            if len(np.unique(proj.labels[train])) < 2:
                continue
            val = proj.rows(np.sort(folds[k]))
            scores.append([_mean_loss(val, u) for u in _fit_path(proj.rows(train), grid)])
        if scores:
            chosen = grid[int(np.argmin(np.mean(scores, axis=0)))]
    if chosen is None:
        chosen = grid[(len(grid) - 1) // 2]
        log.warning("cross-validation degenerate on %d merge rows; using lambda_cv=%g",
                    proj.n_rows, chosen)
    u = solve_glmnet(proj, _merge_cfg(chosen)).model.coefficients
    return ModelVector(W.columns @ (V @ u)), chosen


class PipelineResult(NamedTuple):
    model: ModelVector
    timings: RunTimings
    diagnostics: dict


@dataclass
class _Clock:
    timings: RunTimings = field(default_factory=RunTimings)
    stage: str = "setup"

    def run(self, stage, fn, *args):
        self.stage = stage
        t = time.perf_counter()
        out = fn(*args)
        setattr(self.timings, stage, getattr(self.timings, stage) + time.perf_counter() - t)
        return out


def run_pipeline(ds: SparseDataset, spec: MethodSpec, solver_cfg: SolverConfig,
                 n_threads: int | None = None, exchange: comm.Exchange | None = None) -> PipelineResult:
    """Train one distributed model on ``ds`` as described by ``spec``.

    The p logical workers share ``ds`` read-only and talk only through the
    collectives of ``exchange``. Results do not depend on ``n_threads``.
    """
    if ds.n_rows < spec.p:
        raise ValueError(f"need at least p={spec.p} rows, got {ds.n_rows}")
    p = spec.p
    exchange = exchange or comm.Exchange(p)
    pool = comm.WorkerPool(p, n_threads)
    part_seed, merge_seed, cv_seed = np.random.SeedSequence(spec.seed).spawn(3)
    clock = _Clock()
    t_start = time.perf_counter()

    plan = partition(ds, p, np.random.default_rng(part_seed))
    diagnostics: dict = {"method": spec.method, "p": p}

    try:
        parts = pool.map(lambda i: plan.extract(ds, i))
        single = [i for i, part in enumerate(parts) if len(np.unique(part.labels)) < 2]
        if single:
            log.info("partitions with a single class: %s", single)
        diagnostics["single_class_partitions"] = single

        train = parts
        if spec.augments:
            cents = clock.run("centroids", pool.map, lambda i: compute_centroids(parts[i], i))
            inbox = clock.run("all_to_all", exchange.all_to_all,
                              [comm.centroid_message(c) for c in cents])
            train = clock.run("round1", pool.map, lambda i: augment_partition(
                parts[i], [comm.message_centroid(m) for m in inbox[i]], i))

        r1 = clock.run("round1", pool.map, lambda i: solve_glmnet(train[i], solver_cfg))
        got = clock.run("gather1", exchange.gather,
                        [comm.model_message(i, r.model) for i, r in enumerate(r1)])
        W = ModelMatrix.from_models([comm.message_model(m) for m in got], "round1")
        diagnostics["round1_nnz"] = [r.model.nnz() for r in r1]

        if spec.reweights:
            def alpha_step():
                fw = compute_feature_weights(W, spec.beta)
                msg = comm.Message(0, comm.FEATURE_WEIGHTS, (fw.beta,), (fw.alpha, fw.support_fraction))
                return fw, exchange.broadcast(msg)

            fw, delivered = clock.run("alpha", alpha_step)
            cfgs = [solver_cfg.with_penalty(Penalty(solver_cfg.penalty.lambda1,
                                                    solver_cfg.penalty.lambda2, m.vectors[0]))
                    for m in delivered]
            r2 = clock.run("round2", pool.map, lambda i: solve_glmnet(train[i], cfgs[i]))
            got = clock.run("gather2", exchange.gather,
                            [comm.model_message(i, r.model) for i, r in enumerate(r2)])
            W = ModelMatrix.from_models([comm.message_model(m) for m in got], "round2")
            diagnostics["round2_nnz"] = [r.model.nnz() for r in r2]
            diagnostics["alpha_max"] = float(fw.alpha.max())

        if spec.method == "naive":
            model = clock.run("merge", naive_average, W)
        else:
            def merge_step():
                if spec.merge_set_policy == "main_partition":
                    mset = parts[0]
                else:
                    mset = subsample(ds, merge_set_size(ds.n_rows, p, ds.n_cols),
                                     np.random.default_rng(merge_seed))
                out, lam = owa_merge(mset, W, spec.lambda_cv_grid, spec.cv_folds,
                                     np.random.default_rng(cv_seed))
                return out, lam, mset.n_rows

            model, lam, n_c = clock.run("merge", merge_step)
            diagnostics["chosen_lambda_cv"] = lam
            diagnostics["merge_set_size"] = n_c
    except Exception as exc:
        clock.timings.total = time.perf_counter() - t_start
        raise PipelineAborted(clock.stage, clock.timings, exc) from exc

    clock.timings.total = time.perf_counter() - t_start
    diagnostics["nnz"] = model.nnz()
    diagnostics["exchange"] = exchange.stats()
    return PipelineResult(model, clock.timings, diagnostics)
