"""Accelerated proximal-gradient solver used as an independent oracle.

Deliberately slow and simple: dense-vector FISTA with backtracking on the
Lipschitz estimate, a monotone safeguard and gradient-based restarts.
"""

from __future__ import annotations

import numpy as np

from .data import SparseDataset
from .objective import ModelVector, Penalty

MAX_ITER = 1_000_000


class NoConvergence(RuntimeError):
    """Iteration cap reached; ``trace`` holds the objective values so far."""

    def __init__(self, msg: str, trace=()):
        super().__init__(msg)
        self.trace = list(trace)


def _smooth(X, y, r, l2, w):
    t = -y * (X @ w)
    # log(1 + e^t) and its derivative, written out independently of the core
    val = float(r @ (np.logaddexp(0.0, t))) + float(l2 @ (w * w))
    dldt = r * 0.5 * (1.0 + np.tanh(0.5 * t))
    grad = X.T @ (-y * dldt) + 2.0 * l2 * w
    return val, grad


def _prox(v, step, l1):
    return np.sign(v) * np.maximum(np.abs(v) - step * l1, 0.0)


def solve_reference(ds: SparseDataset, penalty: Penalty, tol: float = 1e-10,
                    max_iter: int = MAX_ITER, return_trace: bool = False):
    """Minimize the penalized objective; stop when the relative change < ``tol``.

    Raises ``NoConvergence`` after ``max_iter`` iterations.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = ds.n_cols
    if ds.n_rows == 0:
        out = ModelVector(np.zeros(d))
        return (out, [0.0]) if return_trace else out
    X = ds.to_csr()
    y, r = ds.labels, ds.row_weights
    l1, l2 = penalty.l1_weights(d), penalty.l2_weights(d)

    def F(w):
        return _smooth(X, y, r, l2, w)[0] + float(l1 @ np.abs(w))

    x = np.zeros(d)
    yk = x.copy()
    theta = 1.0
    L = 1.0
    Fx = F(x)
    trace = [Fx]
    small = 0
    for it in range(max_iter):
        fy, gy = _smooth(X, y, r, l2, yk)
        while True:
            cand = _prox(yk - gy / L, 1.0 / L, l1)
            diff = cand - yk
            fc = _smooth(X, y, r, l2, cand)[0]
            if fc <= fy + gy @ diff + 0.5 * L * (diff @ diff) + 1e-14 * abs(fy):
                break
            L *= 2.0
        Fc = fc + float(l1 @ np.abs(cand))
        theta_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        if Fc <= Fx:
            x_next, F_next = cand, Fc
        else:
            x_next, F_next = x, Fx
        if Fc > Fx or (cand - x) @ (cand - yk) > 0:
            # restart momentum
            theta_next = 1.0
            yk = x_next.copy()
        else:
            yk = x_next + ((theta - 1.0) / theta_next) * (x_next - x)
        change = abs(Fx - F_next) / max(abs(F_next), 1e-300)
        x, Fx, theta = x_next, F_next, theta_next
        trace.append(Fx)
        L *= 0.9
        # several consecutive quiet iterations, since restarts can stall one step
        small = small + 1 if change < tol else 0
        if small >= 10:
            break
    else:
        raise NoConvergence(f"no convergence within {max_iter} iterations", trace)
    model = ModelVector(x)
    return (model, trace) if return_trace else model
