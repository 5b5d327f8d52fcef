"""Weighted elastic-net logistic regression: loss, gradient, curvature.

All functions take an optional intercept through ``ModelVector``; the
intercept is never penalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DimensionError, SparseDataset


@dataclass(frozen=True)
class Penalty:
    """``lambda1 * sum |w_j| / a_j + lambda2 * sum (w_j / a_j)^2``.

    ``feature_scale`` holds the per-feature ``a_j`` (all ones when None).
    """

    lambda1: float = 0.0
    lambda2: float = 0.0
    feature_scale: np.ndarray | None = None

    def __post_init__(self):
        if not (self.lambda1 >= 0 and self.lambda2 >= 0):
            raise ValueError("penalty weights must be nonnegative")
        if self.feature_scale is not None:
            fs = np.asarray(self.feature_scale, dtype=np.float64)
            if not np.all(fs > 0):
                raise ValueError("feature_scale entries must be positive")
            object.__setattr__(self, "feature_scale", fs)

    def l1_weights(self, d: int) -> np.ndarray:
        if self.feature_scale is None:
            return np.full(d, self.lambda1)
        self._check(d)
        return self.lambda1 / self.feature_scale

    def l2_weights(self, d: int) -> np.ndarray:
        if self.feature_scale is None:
            return np.full(d, self.lambda2)
        self._check(d)
        return self.lambda2 / self.feature_scale**2

    def _check(self, d):
        if len(self.feature_scale) != d:
            raise DimensionError(f"feature_scale has length {len(self.feature_scale)}, expected {d}")

    def value(self, coef: np.ndarray) -> float:
        d = len(coef)
        return float(self.l1_weights(d) @ np.abs(coef) + self.l2_weights(d) @ (coef * coef))


@dataclass(frozen=True, eq=False)
class ModelVector:
    coefficients: np.ndarray
    intercept: float | None = None

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=np.float64)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be a finite 1-d vector")
        if self.intercept is not None and not np.isfinite(self.intercept):
            raise ValueError("intercept must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def zeros(cls, d: int, intercept: bool = False) -> "ModelVector":
        return cls(np.zeros(d), 0.0 if intercept else None)

    @property
    def d(self) -> int:
        return len(self.coefficients)

    @property
    def bias(self) -> float:
        return 0.0 if self.intercept is None else float(self.intercept)

    def nnz(self) -> int:
        return int(np.count_nonzero(self.coefficients))

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coefficients)

    def decision_function(self, ds: SparseDataset) -> np.ndarray:
        return margins(ds, self)

    def __eq__(self, other):
        if not isinstance(other, ModelVector):
            return NotImplemented
        return (np.array_equal(self.coefficients, other.coefficients)
                and self.intercept == other.intercept)


def _as_model(w) -> ModelVector:
    return w if isinstance(w, ModelVector) else ModelVector(np.asarray(w, dtype=np.float64))


def margins(ds: SparseDataset, w) -> np.ndarray:
    """Activations ``X w + b`` for every row."""
    w = _as_model(w)
    if w.d != ds.n_cols:
        raise DimensionError(f"model has d={w.d}, dataset has d={ds.n_cols}")
    return ds.to_csr() @ w.coefficients + w.bias


def log1pexp(t: np.ndarray) -> np.ndarray:
    """Stable ``log(1 + exp(t))``."""
    return np.log1p(np.exp(-np.abs(t))) + np.maximum(t, 0.0)


def sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t, dtype=np.float64)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def loss_from_margins(labels, row_weights, z) -> float:
    return float(row_weights @ log1pexp(-labels * z))


def logistic_loss(ds: SparseDataset, w) -> float:
    """Weighted sum of ``log(1 + exp(-y_i w.x_i))``."""
    z = margins(ds, w)
    return loss_from_margins(ds.labels, ds.row_weights, z)


def objective(ds: SparseDataset, w, pen: Penalty) -> float:
    w = _as_model(w)
    return logistic_loss(ds, w) + pen.value(w.coefficients)


def _residual(ds: SparseDataset, z: np.ndarray) -> np.ndarray:
    # d loss / d z_i
    return -ds.row_weights * ds.labels * sigmoid(-ds.labels * z)


def smooth_gradient(ds: SparseDataset, w) -> np.ndarray:
    """Gradient of the (unpenalized) weighted logistic loss w.r.t. coefficients."""
    z = margins(ds, w)
    return ds.to_csr().T @ _residual(ds, z)


def intercept_gradient(ds: SparseDataset, w) -> float:
    return float(_residual(ds, margins(ds, w)).sum())


def curvature_weights(ds: SparseDataset, z: np.ndarray) -> np.ndarray:
    s = sigmoid(z)
    return ds.row_weights * s * (1.0 - s)


def quadratic_diag(ds: SparseDataset, w) -> np.ndarray:
    """Diagonal of the loss Hessian: ``sum_i r_i s_i (1 - s_i) x_ij^2``."""
    z = margins(ds, w)
    X = ds.to_csr()
    sq = X.multiply(X).tocsr()
    return np.asarray(sq.T @ curvature_weights(ds, z)).ravel()


def lambda_max(ds: SparseDataset) -> float:
    """Smallest L1 weight for which the zero model is optimal."""
    if ds.n_rows == 0 or ds.n_cols == 0:
        return 0.0
    return float(np.max(np.abs(smooth_gradient(ds, np.zeros(ds.n_cols)))))


def accuracy(ds: SparseDataset, w) -> float:
    """Fraction of rows with ``sign(w.x) == y``; a zero activation counts as +1."""
    if ds.n_rows == 0:
        return float("nan")
    pred = np.where(margins(ds, w) >= 0, 1.0, -1.0)
    return float(np.mean(pred == ds.labels))
