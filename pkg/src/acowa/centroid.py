"""Class-conditional centroids and centroid augmentation of partitions."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import DimensionError, SparseDataset
from .objective import _as_model, log1pexp, margins

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CentroidSummary:
    """Mean of the positive and of the negative rows of one partition.

    Masses are the row counts; an absent class has mass 0, a zero mean
    and its ``valid_*`` flag cleared.
    """

    partition_id: int
    mu_plus: np.ndarray
    mu_minus: np.ndarray
    mass_plus: int
    mass_minus: int

    @property
    def valid_plus(self) -> bool:
        return self.mass_plus > 0

    @property
    def valid_minus(self) -> bool:
        return self.mass_minus > 0

    @property
    def d(self) -> int:
        return len(self.mu_plus)


def compute_centroids(part: SparseDataset, partition_id: int) -> CentroidSummary:
    X = part.to_csr()
    out = []
    for label in (1.0, -1.0):
        rows = np.flatnonzero(part.labels == label)
        if len(rows):
            mu = np.asarray(X[rows].sum(axis=0)).ravel() / len(rows)
        else:
            mu = np.zeros(part.n_cols)
        out.append((mu, len(rows)))
    (mu_p, n_p), (mu_m, n_m) = out
    return CentroidSummary(partition_id, mu_p, mu_m, n_p, n_m)


def augment_partition(part: SparseDataset, all_centroids: list[CentroidSummary],
                      self_id: int) -> SparseDataset:
    """Append every other partition's centroids, weighted by class mass.

    Original rows keep their weights. Empty classes are skipped.
    """
    ids = [c.partition_id for c in all_centroids]
    if self_id not in ids:
        raise ValueError(f"partition {self_id} missing from centroid set")
    rows, labels, weights = [], [], []
    for c in sorted(all_centroids, key=lambda c: c.partition_id):
        if c.d != part.n_cols:
            raise DimensionError(f"centroid d={c.d} does not match partition d={part.n_cols}")
        if c.partition_id == self_id:
            continue
        for mu, mass, lab in ((c.mu_plus, c.mass_plus, 1.0), (c.mu_minus, c.mass_minus, -1.0)):
            if mass == 0:
                log.info("partition %d has no %+d rows; centroid skipped", c.partition_id, int(lab))
                continue
            rows.append(mu)
            labels.append(lab)
            weights.append(float(mass))
    if not rows:
        return part
    extra = SparseDataset.from_matrix(np.vstack(rows), np.array(labels), np.array(weights))
    return SparseDataset.vstack([part, extra])


def centroid_loss_gap(part: SparseDataset, w) -> tuple[float, float]:
    """Loss of a single-class set minus the loss of its centroid, and the bound.

    Returns ``(gap, bound)`` with ``gap = L(part) - |part| log(1 + exp(-y w.mu))``
    and ``bound = |part| / 8 * Var(Z)``, ``Z`` the activations ``-y w.x`` and
    ``Var`` the population variance.
    """
    w = _as_model(w)
    if part.n_rows == 0:
        return 0.0, 0.0
    y = part.labels[0]
    if not np.all(part.labels == y):
        raise ValueError("centroid_loss_gap needs a single-class set")
    n = part.n_rows
    mu = np.asarray(part.to_csr().sum(axis=0)).ravel() / n
    zbar = -y * (float(mu @ w.coefficients) + w.bias)
    Z = -y * margins(part, w)
    # per-point differences; unit point weights as in the centroid argument
    gap = float(np.sum(log1pexp(Z) - log1pexp(np.array([zbar]))[0]))
    bound = n / 8.0 * float(np.mean((Z - Z.mean()) ** 2))
    return gap, bound
