"""Proximal Newton coordinate-descent solver (newGLMNET style).

Each outer iteration forms the second-order model of the smooth part
(logistic loss plus the L2 term) around the current point, minimizes the
model plus the L1 term with coordinate descent, and backtracks along the
resulting direction until the Armijo condition holds on the true objective.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._cd import cd_subproblem
from .data import DimensionError, SparseDataset
from .objective import ModelVector, Penalty, log1pexp, sigmoid

RELAXED_OUTER = 20
RELAXED_INNER = 50
FULL_OUTER = 100
FULL_INNER = 1000

CURVATURE_FLOOR = 1e-12
ARMIJO_SIGMA = 0.01
BACKTRACK = 0.5
MAX_HALVINGS = 30
INNER_FORCING = 1e-3


class SolverDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    ``mode="relaxed"`` caps the solver at 20 Newton steps of at most 50 CD
    sweeps each and enables active-set shrinking; ``mode="full"`` runs up to
    100 x 1000 with shrinking off. Unset fields take the mode's defaults.

    ``kkt_tol > 0`` additionally requires the largest subgradient violation
    to fall below it before declaring convergence (full mode: 1e-7).
    """

    penalty: Penalty = field(default_factory=Penalty)
    mode: str = "relaxed"
    max_outer: int | None = None
    max_inner: int | None = None
    tol: float | None = None
    inner_tol: float | None = None
    shrinking: bool | None = None
    kkt_tol: float | None = None
    shuffle: bool = False
    seed: int | None = None
    fit_intercept: bool = False

    def __post_init__(self):
        if self.mode not in ("relaxed", "full"):
            raise ValueError(f"unknown solver mode {self.mode!r}")
        relaxed = self.mode == "relaxed"
        defaults = dict(
            max_outer=RELAXED_OUTER if relaxed else FULL_OUTER,
            max_inner=RELAXED_INNER if relaxed else FULL_INNER,
            tol=1e-4 if relaxed else 1e-8,
            inner_tol=1e-6 if relaxed else 1e-10,
            shrinking=relaxed,
            kkt_tol=0.0 if relaxed else 1e-7,
        )
        for k, v in defaults.items():
            if getattr(self, k) is None:
                object.__setattr__(self, k, v)
        if relaxed and (self.max_outer, self.max_inner) != (RELAXED_OUTER, RELAXED_INNER):
            raise ValueError("relaxed mode fixes max_outer=20 and max_inner=50")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be >= 1")
        if not (self.tol > 0 and self.inner_tol > 0) or self.kkt_tol < 0:
            raise ValueError("tolerances must be positive")

    @classmethod
    def relaxed(cls, lambda1=0.0, lambda2=0.0, **kw) -> "SolverConfig":
        return cls(Penalty(lambda1, lambda2), mode="relaxed", **kw)

    @classmethod
    def full(cls, lambda1=0.0, lambda2=0.0, **kw) -> "SolverConfig":
        return cls(Penalty(lambda1, lambda2), mode="full", **kw)

    def with_penalty(self, penalty: Penalty) -> "SolverConfig":
        kw = {k: getattr(self, k) for k in self.__dataclass_fields__}
        kw["penalty"] = penalty
        return SolverConfig(**kw)


@dataclass(frozen=True, eq=False)
class SolveResult:
    model: ModelVector
    objective_trace: np.ndarray
    outer_iters_used: int
    converged: bool
    wall_time: float


def soft_threshold(z: float, t: float) -> float:
    return float(np.sign(z) * max(abs(z) - t, 0.0))


def _design(ds: SparseDataset, fit_intercept: bool):
    X = ds.to_csr()
    if fit_intercept:
        X = sp.hstack([X, np.ones((ds.n_rows, 1))], format="csr")
    Xc = X.tocsc()
    Xc.sort_indices()
    return X, Xc


def solve_glmnet(ds: SparseDataset, cfg: SolverConfig, warm_start: ModelVector | None = None) -> SolveResult:
    """Minimize the penalized weighted logistic objective on ``ds``."""
    t0 = time.perf_counter()
    d = ds.n_cols
    pen = cfg.penalty
    l1 = pen.l1_weights(d)
    l2 = pen.l2_weights(d)
    if cfg.fit_intercept:
        l1 = np.append(l1, 0.0)
        l2 = np.append(l2, 0.0)
    m = len(l1)

    w = np.zeros(m)
    if warm_start is not None:
        if warm_start.d != d:
            raise DimensionError(f"warm start has d={warm_start.d}, dataset has d={d}")
        w[:d] = warm_start.coefficients
        if cfg.fit_intercept:
            w[d] = warm_start.bias

    def finish(w, trace, iters, converged):
        model = ModelVector(w[:d], float(w[d]) if cfg.fit_intercept else None)
        return SolveResult(model, np.asarray(trace), iters, converged, time.perf_counter() - t0)

    if ds.n_rows == 0:
        # only the penalty remains; its minimizer is the origin
        return finish(np.zeros(m), [0.0], 0, True)

    X, Xc = _design(ds, cfg.fit_intercept)
    y, rw = ds.labels, ds.row_weights
    sq = Xc.multiply(Xc).tocsc()
    rng = np.random.default_rng(cfg.seed) if cfg.shuffle else None

    def fval(w, z):
        return float(rw @ log1pexp(-y * z)) + float(l1 @ np.abs(w)) + float(l2 @ (w * w))

    z = X @ w
    F = fval(w, z)
    if not np.isfinite(F):
        raise SolverDiverged("initial objective is not finite")
    trace = [F]
    converged = False
    prev_violation = np.inf
    outer = 0
    for outer in range(1, cfg.max_outer + 1):
        s = sigmoid(-y * z)
        grad = X.T @ (-rw * y * s) + 2.0 * l2 * w
        curv = rw * s * (1.0 - s)
        hdiag = np.maximum(sq.T @ curv + 2.0 * l2, CURVATURE_FLOOR)

        # minimum-norm subgradient magnitude per coordinate
        viol = np.where(w != 0, np.abs(grad + np.sign(w) * l1), np.maximum(np.abs(grad) - l1, 0.0))
        active = np.ones(m, dtype=bool)
        if cfg.shrinking and np.isfinite(prev_violation):
            margin = prev_violation / ds.n_rows
            active = ~((w == 0) & (np.abs(grad) < l1 - margin))
        prev_violation = float(viol.max()) if m else 0.0
        if cfg.kkt_tol and prev_violation <= cfg.kkt_tol:
            converged = True
            break
        # inexact Newton: solve the subproblem only as far as the current
        # optimality gap warrants
        inner_tol = max(cfg.inner_tol, INNER_FORCING * float(np.max(viol / hdiag)) if m else 0.0)
        order = np.flatnonzero(active)
        if rng is not None:
            order = rng.permutation(order)

        u, _, _ = cd_subproblem(Xc.indptr.astype(np.int64), Xc.indices.astype(np.int64), Xc.data,
                                curv, grad, hdiag, l1, l2, w, order.astype(np.int64),
                                cfg.max_inner, inner_tol)
        step = u - w
        if not np.any(step):
            trace.append(F)
            converged = True
            break
        delta = float(grad @ step) + float(l1 @ (np.abs(u) - np.abs(w)))

        t = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS):
            w_new = u if t == 1.0 else w + t * step
            z_new = X @ w_new
            F_new = fval(w_new, z_new)
            if not np.isfinite(F_new):
                raise SolverDiverged(f"objective became non-finite at outer iteration {outer}")
            if F_new - F <= ARMIJO_SIGMA * t * delta:
                accepted = True
                break
            t *= BACKTRACK
        if not accepted:
            trace.append(F)
            break
        decrease = F - F_new
        w, z, F = w_new, z_new, F_new
        trace.append(F)
        if decrease <= cfg.tol * abs(F) and not cfg.kkt_tol:
            converged = True
            break
    return finish(w, trace, outer, converged)


def kkt_violation(ds: SparseDataset, model: ModelVector, penalty: Penalty) -> np.ndarray:
    """Per-coordinate distance of zero from the subdifferential at ``model``."""
    from .objective import smooth_gradient

    d = ds.n_cols
    l1, l2 = penalty.l1_weights(d), penalty.l2_weights(d)
    w = model.coefficients
    g = smooth_gradient(ds, model) + 2.0 * l2 * w
    return np.where(w != 0, np.abs(g + np.sign(w) * l1), np.maximum(np.abs(g) - l1, 0.0))
