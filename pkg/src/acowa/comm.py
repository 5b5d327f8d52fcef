"""In-process worker harness: a thread pool plus three collectives.

Every message crossing a worker boundary is encoded to the binary record
format below and decoded on delivery, so a multi-process transport only
needs to move the bytes.

Record layout (little endian)::

    u32  body length in bytes
    i32  partition id
    u8   kind tag
    u8   number of scalars S
    u8   number of vectors V
    f64  scalars[S]
    V x vector:
        u8   encoding (0 dense, 1 sparse)
        u64  dimension
        dense:  f64 values[dimension]
        sparse: u64 nnz, u64 indices[nnz], f64 values[nnz]
"""

from __future__ import annotations

import os
import struct
import threading
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .centroid import CentroidSummary
from .objective import ModelVector

CENTROIDS = 1
MODEL = 2
FEATURE_WEIGHTS = 3

DENSE = 0
SPARSE = 1

_HEAD = struct.Struct("<iBBB")
_LEN = struct.Struct("<I")
_VEC = struct.Struct("<BQ")
_U64 = struct.Struct("<Q")


class WorkerFailure(RuntimeError):
    def __init__(self, partition_id: int, cause: BaseException):
        super().__init__(f"worker {partition_id} failed: {cause!r}")
        self.partition_id = partition_id
        self.cause = cause


@dataclass(frozen=True, eq=False)
class Message:
    partition_id: int
    kind: int
    scalars: tuple = ()
    vectors: tuple = ()


def encode(msg: Message) -> bytes:
    parts = [_HEAD.pack(msg.partition_id, msg.kind, len(msg.scalars), len(msg.vectors)),
             np.asarray(msg.scalars, dtype="<f8").tobytes()]
    for v in msg.vectors:
        v = np.asarray(v, dtype="<f8")
        nz = np.flatnonzero(v)
        # sparse costs 16 bytes per nonzero + 8, dense 8 per entry
        if 16 * len(nz) + 8 < 8 * len(v):
            parts += [_VEC.pack(SPARSE, len(v)), _U64.pack(len(nz)),
                      nz.astype("<u8").tobytes(), v[nz].tobytes()]
        else:
            parts += [_VEC.pack(DENSE, len(v)), v.tobytes()]
    body = b"".join(parts)
    return _LEN.pack(len(body)) + body


def decode(buf: bytes) -> Message:
    (length,) = _LEN.unpack_from(buf, 0)
    if length != len(buf) - _LEN.size:
        raise ValueError(f"record length {length} does not match buffer size {len(buf) - _LEN.size}")
    off = _LEN.size
    pid, kind, n_s, n_v = _HEAD.unpack_from(buf, off)
    off += _HEAD.size
    scalars = tuple(np.frombuffer(buf, "<f8", n_s, off).tolist())
    off += 8 * n_s
    vectors = []
    for _ in range(n_v):
        enc, dim = _VEC.unpack_from(buf, off)
        off += _VEC.size
        if enc == DENSE:
            v = np.frombuffer(buf, "<f8", dim, off).astype(np.float64)
            off += 8 * dim
        elif enc == SPARSE:
            (nnz,) = _U64.unpack_from(buf, off)
            off += _U64.size
            idx = np.frombuffer(buf, "<u8", nnz, off).astype(np.int64)
            off += 8 * nnz
            v = np.zeros(dim)
            v[idx] = np.frombuffer(buf, "<f8", nnz, off)
            off += 8 * nnz
        else:
            raise ValueError(f"unknown vector encoding {enc}")
        vectors.append(v)
    if off != len(buf):
        raise ValueError("trailing bytes in record")
    return Message(pid, kind, scalars, tuple(vectors))


def centroid_message(c: CentroidSummary) -> Message:
    return Message(c.partition_id, CENTROIDS, (float(c.mass_plus), float(c.mass_minus)),
                   (c.mu_plus, c.mu_minus))


def message_centroid(m: Message) -> CentroidSummary:
    if m.kind != CENTROIDS:
        raise ValueError(f"expected a centroid record, got kind {m.kind}")
    mp, mm = m.scalars
    return CentroidSummary(m.partition_id, m.vectors[0], m.vectors[1], int(mp), int(mm))


def model_message(pid: int, w: ModelVector) -> Message:
    scal = (0.0, 0.0) if w.intercept is None else (1.0, float(w.intercept))
    return Message(pid, MODEL, scal, (w.coefficients,))


def message_model(m: Message) -> ModelVector:
    if m.kind != MODEL:
        raise ValueError(f"expected a model record, got kind {m.kind}")
    has_b, b = m.scalars
    return ModelVector(m.vectors[0], b if has_b else None)


@dataclass
class Exchange:
    """Collectives among ``p`` logical workers, with message accounting.

    Inputs are per-worker lists indexed by partition id. Each call returns
    only after every message is delivered, i.e. it is a barrier.
    """

    p: int
    calls: Counter = field(default_factory=Counter)
    messages: Counter = field(default_factory=Counter)
    bytes_sent: Counter = field(default_factory=Counter)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def _send(self, kind: str, msg: Message) -> Message:
        raw = encode(msg)
        with self._lock:
            self.messages[kind] += 1
            self.bytes_sent[kind] += len(raw)
        return decode(raw)

    def _ordered(self, msgs: Sequence[Message]) -> list[Message]:
        msgs = sorted(msgs, key=lambda m: m.partition_id)
        if [m.partition_id for m in msgs] != list(range(self.p)):
            raise ValueError(f"collective needs exactly one message per worker 0..{self.p - 1}")
        return msgs

    def all_to_all(self, msgs: Sequence[Message]) -> list[list[Message]]:
        """Worker ``i`` ends up with every worker's message, its own included."""
        msgs = self._ordered(msgs)
        self.calls["all_to_all"] += 1
        inbox = [[None] * self.p for _ in range(self.p)]
        for src, m in enumerate(msgs):
            for dst in range(self.p):
                inbox[dst][src] = m if dst == src else self._send("all_to_all", m)
        return inbox

    def gather(self, msgs: Sequence[Message], root: int = 0) -> list[Message]:
        """All messages on ``root`` in partition-id order."""
        msgs = self._ordered(msgs)
        self.calls["gather"] += 1
        out = []
        for m in msgs:
            if m.partition_id == root:
                # the root's own contribution counts too: one message per worker
                with self._lock:
                    self.messages["gather"] += 1
                out.append(m)
            else:
                out.append(self._send("gather", m))
        return out

    def broadcast(self, msg: Message, root: int = 0) -> list[Message]:
        self.calls["broadcast"] += 1
        return [msg if dst == root else self._send("broadcast", msg) for dst in range(self.p)]

    def stats(self) -> dict:
        return {"calls": dict(self.calls), "messages": dict(self.messages),
                "bytes": dict(self.bytes_sent)}


def default_threads() -> int:
    env = os.environ.get("ACOWA_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("ACOWA_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


class WorkerPool:
    """Runs one task per partition on at most ``n_threads`` threads."""

    def __init__(self, p: int, n_threads: int | None = None):
        self.p = p
        self.n_threads = max(1, min(p, n_threads or default_threads()))

    def map(self, fn: Callable[[int], object]) -> list:
        """``[fn(0), ..., fn(p-1)]``; any failure aborts the round."""

        def run(i):
            try:
                return fn(i)
            except Exception as exc:
                raise WorkerFailure(i, exc) from exc

        if self.n_threads == 1:
            return [run(i) for i in range(self.p)]
        with ThreadPoolExecutor(self.n_threads) as ex:
            return list(ex.map(run, range(self.p)))
