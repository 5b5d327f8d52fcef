"""Sparse datasets, LIBSVM ingestion, partitioning and synthetic data.

Rows are stored in CSR form. On disk LIBSVM feature indices are 1-based;
in memory they are 0-based.
"""

from __future__ import annotations

import gzip
import io
import logging
import os
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)


class ParseError(ValueError):
    """Malformed LIBSVM input."""

    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class DimensionError(ValueError):
    pass


class PartitionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SparseDataset:
    """Immutable CSR feature matrix with +/-1 labels and per-row weights."""

    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    labels: np.ndarray
    n_cols: int
    row_weights: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "indptr", np.ascontiguousarray(self.indptr, dtype=np.int64))
        object.__setattr__(self, "indices", np.ascontiguousarray(self.indices, dtype=np.int64))
        object.__setattr__(self, "values", np.ascontiguousarray(self.values, dtype=np.float64))
        object.__setattr__(self, "labels", np.ascontiguousarray(self.labels, dtype=np.float64))
        n = len(self.indptr) - 1
        if self.row_weights is None:
            rw = np.ones(n)
        else:
            rw = np.ascontiguousarray(self.row_weights, dtype=np.float64)
        object.__setattr__(self, "row_weights", rw)
        object.__setattr__(self, "n_cols", int(self.n_cols))
        for arr in (self.indptr, self.indices, self.values, self.labels, self.row_weights):
            arr.flags.writeable = False
        self.validate()

    @property
    def n_rows(self) -> int:
        return len(self.indptr) - 1

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def validate(self) -> None:
        """Raise ``ValueError`` if any CSR or label invariant is broken."""
        ip, idx = self.indptr, self.indices
        if ip.ndim != 1 or len(ip) < 1 or ip[0] != 0:
            raise ValueError("indptr must start at 0")
        if np.any(np.diff(ip) < 0):
            raise ValueError("indptr must be nondecreasing")
        if ip[-1] != len(idx) or len(idx) != len(self.values):
            raise ValueError("indptr[-1] must equal nnz")
        if self.n_cols < 0:
            raise ValueError("n_cols must be nonnegative")
        if len(idx):
            if idx.min() < 0 or idx.max() >= self.n_cols:
                raise ValueError("column index out of range")
            # strictly increasing within each row: a non-increase may only
            # occur where a new row starts
            steps = np.diff(idx) <= 0
            row_starts = np.zeros(len(idx), dtype=bool)
            starts = ip[1:-1]
            row_starts[starts[starts < len(idx)]] = True
            if np.any(steps & ~row_starts[1:]):
                raise ValueError("column indices must be strictly increasing within a row")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite feature value")
        n = self.n_rows
        if len(self.labels) != n or len(self.row_weights) != n:
            raise ValueError("labels and row_weights must have n_rows entries")
        if n and not np.all(np.abs(self.labels) == 1.0):
            raise ValueError("labels must be -1 or +1")
        if np.any(self.row_weights < 0) or not np.all(np.isfinite(self.row_weights)):
            raise ValueError("row weights must be finite and nonnegative")

    def to_csr(self) -> sp.csr_matrix:
        """scipy view over the same buffers (no copy)."""
        return sp.csr_matrix((self.values, self.indices, self.indptr), shape=self.shape, copy=False)

    def rows(self, idx) -> "SparseDataset":
        """Dataset made of the given rows (in the given order)."""
        idx = np.asarray(idx, dtype=np.int64)
        sub = self.to_csr()[idx]
        sub.sort_indices()
        return SparseDataset(sub.indptr, sub.indices, sub.data, self.labels[idx],
                             self.n_cols, self.row_weights[idx])

    def with_weights(self, row_weights) -> "SparseDataset":
        return SparseDataset(self.indptr, self.indices, self.values, self.labels,
                             self.n_cols, row_weights)

    def scale_cols(self, scale) -> "SparseDataset":
        """Multiply column ``j`` by ``scale[j]``."""
        scale = np.asarray(scale, dtype=np.float64)
        if scale.shape != (self.n_cols,):
            raise DimensionError("scale must have length n_cols")
        return SparseDataset(self.indptr, self.indices, self.values * scale[self.indices],
                             self.labels, self.n_cols, self.row_weights)

    @classmethod
    def from_matrix(cls, X, labels, row_weights=None, n_cols: int | None = None) -> "SparseDataset":
        """Build from a dense array or any scipy sparse matrix; explicit zeros are dropped."""
        m = sp.csr_matrix(X, dtype=np.float64)
        if n_cols is not None and n_cols != m.shape[1]:
            m = sp.csr_matrix((m.data, m.indices, m.indptr), shape=(m.shape[0], n_cols))
        m.eliminate_zeros()
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.indptr, m.indices, m.data, labels, m.shape[1], row_weights)

    @classmethod
    def empty(cls, n_cols: int = 0) -> "SparseDataset":
        return cls(np.zeros(1, np.int64), np.zeros(0, np.int64), np.zeros(0), np.zeros(0), n_cols)

    @classmethod
    def vstack(cls, parts: list["SparseDataset"]) -> "SparseDataset":
        d = parts[0].n_cols
        if any(p.n_cols != d for p in parts):
            raise DimensionError("cannot stack datasets with different n_cols")
        m = sp.vstack([p.to_csr() for p in parts], format="csr")
        return cls(m.indptr, m.indices, m.data,
                   np.concatenate([p.labels for p in parts]), d,
                   np.concatenate([p.row_weights for p in parts]))


def normalize_label(raw: float) -> float:
    # 0/1 and -1/+1 corpora both map by sign, 0 -> -1
    return 1.0 if raw > 0 else -1.0


def parse_libsvm(stream: TextIO | Iterable[str], expected_dims: int | None = None) -> SparseDataset:
    """Parse LIBSVM text ``label idx:val ...`` with 1-based indices.

    Parameters
    ----------
    stream : iterable of str
        Lines of the file. Blank lines and ``#`` comments are skipped.
    expected_dims : int, optional
        Feature dimension. Indices beyond it raise ``DimensionError``;
        when larger than the max index seen it sets ``n_cols``.
    """
    indptr = [0]
    indices: list[int] = []
    values: list[float] = []
    labels: list[float] = []
    max_idx = 0
    for lineno, line in enumerate(stream, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            raw = float(tokens[0])
        except ValueError:
            raise ParseError(lineno, f"bad label {tokens[0]!r}") from None
        if not np.isfinite(raw):
            raise ParseError(lineno, f"bad label {tokens[0]!r}")
        prev = 0
        for tok in tokens[1:]:
            k, sep, v = tok.partition(":")
            if not sep:
                raise ParseError(lineno, f"expected idx:val, got {tok!r}")
            try:
                j = int(k)
                x = float(v)
            except ValueError:
                raise ParseError(lineno, f"non-numeric entry {tok!r}") from None
            if j <= 0:
                raise ParseError(lineno, f"index must be positive, got {j}")
            if j == prev:
                raise ParseError(lineno, f"duplicate index {j}")
            if j < prev:
                raise ParseError(lineno, f"index {j} follows {prev}")
            if not np.isfinite(x):
                raise ParseError(lineno, f"non-finite value {tok!r}")
            if expected_dims is not None and j > expected_dims:
                raise DimensionError(f"line {lineno}: index {j} exceeds expected_dims={expected_dims}")
            prev = j
            if x != 0.0:
                indices.append(j - 1)
                values.append(x)
        max_idx = max(max_idx, prev)
        labels.append(normalize_label(raw))
        indptr.append(len(indices))
    d = max(max_idx, expected_dims or 0)
    return SparseDataset(np.array(indptr), np.array(indices, dtype=np.int64),
                         np.array(values, dtype=np.float64), np.array(labels), d)


def load_libsvm(path: str | os.PathLike, expected_dims: int | None = None) -> SparseDataset:
    """Read a LIBSVM file; ``.gz`` files are decompressed transparently."""
    path = os.fspath(path)
    if path.endswith(".gz"):
        with gzip.open(path, "rt") as fh:
            return parse_libsvm(fh, expected_dims)
    with open(path) as fh:
        return parse_libsvm(fh, expected_dims)


def dump_libsvm(ds: SparseDataset, stream: TextIO | str | os.PathLike) -> None:
    """Write ``ds`` in LIBSVM format (labels as +1/-1, floats via repr).

    ``stream`` is an open text stream or a path (``.gz`` compresses).
    """
    if isinstance(stream, (str, os.PathLike)):
        path = os.fspath(stream)
        with (gzip.open(path, "wt") if path.endswith(".gz") else open(path, "w")) as fh:
            return dump_libsvm(ds, fh)
    for i in range(ds.n_rows):
        lo, hi = ds.indptr[i], ds.indptr[i + 1]
        feats = " ".join(f"{j + 1}:{v!r}" for j, v in zip(ds.indices[lo:hi].tolist(), ds.values[lo:hi].tolist()))
        lab = "+1" if ds.labels[i] > 0 else "-1"
        stream.write(f"{lab} {feats}\n" if feats else f"{lab}\n")


def dumps_libsvm(ds: SparseDataset) -> str:
    buf = io.StringIO()
    dump_libsvm(ds, buf)
    return buf.getvalue()


@dataclass(frozen=True)
class PartitionPlan:
    p: int
    assignment: np.ndarray
    seed: int | None = None
    _members: list = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        members = [np.flatnonzero(self.assignment == i) for i in range(self.p)]
        object.__setattr__(self, "_members", members)

    def members(self, i: int) -> np.ndarray:
        """Row ids of partition ``i`` in increasing order."""
        return self._members[i]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.p)

    def extract(self, ds: SparseDataset, i: int) -> SparseDataset:
        return ds.rows(self.members(i))


def partition(ds: SparseDataset, p: int, seed=None) -> PartitionPlan:
    """Balanced random split: shuffle the rows, then deal them round-robin."""
    if p < 1:
        raise PartitionError(f"p must be >= 1, got {p}")
    if p > ds.n_rows:
        raise PartitionError(f"cannot split {ds.n_rows} rows into {p} nonempty partitions")
    rng = np.random.default_rng(seed)
    order = rng.permutation(ds.n_rows)
    assignment = np.empty(ds.n_rows, dtype=np.int64)
    assignment[order] = np.arange(ds.n_rows) % p
    return PartitionPlan(p, assignment, seed)


def subsample(ds: SparseDataset, size: int, seed=None) -> SparseDataset:
    """Uniform sample of ``size`` rows without replacement."""
    if size <= 0:
        raise ValueError(f"sample size must be positive, got {size}")
    if size > ds.n_rows:
        log.warning("subsample size %d exceeds %d rows; clamping", size, ds.n_rows)
        size = ds.n_rows
    rng = np.random.default_rng(seed)
    return ds.rows(rng.choice(ds.n_rows, size=size, replace=False))


def merge_set_size(n: int, p: int, d: int) -> int:
    """``min(n/p, pn/d)`` rows, at least one."""
    return max(1, min(n // p, (p * n) // d if d else n))


@dataclass(frozen=True, eq=False)
class PlantedData:
    dataset: SparseDataset
    w_star: np.ndarray


def synth_sparse(n: int, d: int, density: float, informative_features: int, seed=None,
                 noise: float = 0.0) -> PlantedData:
    """Random sparse rows with labels from a planted sparse linear model.

    Each entry is present with probability ``density`` and drawn from a
    standard normal. ``w_star`` has ``informative_features`` nonzeros;
    labels are ``sign(x . w_star + noise * N(0, 1))`` (ties to +1). With no
    informative features the labels are fair coin flips.
    """
    if not 0 < density <= 1:
        raise ValueError("density must be in (0, 1]")
    if not 0 <= informative_features <= d:
        raise ValueError("informative_features must be in [0, d]")
    rng = np.random.default_rng(seed)
    mask = rng.random((n, d)) < density
    X = np.where(mask, rng.standard_normal((n, d)), 0.0)
    w_star = np.zeros(d)
    if informative_features:
        support = rng.choice(d, size=informative_features, replace=False)
        w_star[support] = rng.standard_normal(informative_features)
        z = X @ w_star + noise * rng.standard_normal(n)
        y = np.where(z >= 0, 1.0, -1.0)
    else:
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    w_star.flags.writeable = False
    return PlantedData(SparseDataset.from_matrix(X, y), w_star)
