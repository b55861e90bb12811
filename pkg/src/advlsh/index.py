"""Bit-sampling LSH for Hamming space: parameters, hash functions, index.

The query procedure scans the hash functions in stored order, looks up the
query's bucket in each table and returns the first stored point within
distance ``c*r`` of the query, or ``None`` (the "no near point" answer).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .datasets import Dataset
from .hamming import pack_bits

__all__ = [
    "LshParams",
    "ConcatHash",
    "LshIndex",
    "derive_params",
    "sample_hash",
    "build_index",
    "support_size",
    "coll_set",
]

MAX_DIM = 1 << 16
WORD_KEY_BITS = 64
_SMALL_BUCKET = 16
# float64 dot products are exact below 2**53
FLOAT_KEY_BITS = 52


def _ceil(x: float) -> int:
    # ln(n)/ln(1/p2) can land a few ulps above an exact integer
    nearest = round(x)
    if abs(x - nearest) < 1e-9:
        return int(nearest)
    return math.ceil(x)


@dataclass(frozen=True)
class LshParams:
    """User inputs ``(n, d, r, c, lam)`` plus the derived LSH parameters.

    ``lam`` scales the number of tables, ``L = ceil(lam * n**rho)``; the
    per-query failure probability of the structure decays like
    ``exp(-Theta(lam))``, so ``lam`` plays the role of ``log(1/delta)``.
    """

    n: int
    d: int
    r: int
    c: float
    lam: float
    p1: float
    p2: float
    rho: float
    k: int
    ell: float
    L: int

    @property
    def cr(self) -> float:
        return self.c * self.r

    @property
    def far_radius(self) -> int:
        """Largest integer distance that still passes the ``<= c*r`` filter."""
        return int(math.floor(self.c * self.r + 1e-9))

    def with_lambda(self, lam: float) -> "LshParams":
        return derive_params(self.n, self.d, self.r, self.c, lam)


def derive_params(n: int, d: int, r: int, c: float, lam: float) -> LshParams:
    if n < 2:
        raise ValueError("n must be at least 2")
    if d < 1 or d > MAX_DIM:
        raise ValueError(f"dimension must lie in [1, {MAX_DIM}]")
    if r <= 0 or r != int(r):
        raise ValueError("r must be a positive integer")
    if c <= 1:
        raise ValueError("c must be greater than 1")
    if c * r > d:
        raise ValueError("far radius exceeds dimension")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    r = int(r)
    p1 = 1.0 - r / d
    p2 = 1.0 - c * r / d
    if p2 > 0:
        rho = math.log(1 / p1) / math.log(1 / p2)
        k = max(1, _ceil(math.log(n) / math.log(1 / p2)))
    else:
        # c*r == d: every hash separates z from its complement
        rho = 0.0
        k = 1
    ell = n**rho
    L = _ceil(lam * ell)
    return LshParams(n=n, d=d, r=r, c=float(c), lam=float(lam), p1=p1, p2=p2,
                     rho=rho, k=k, ell=ell, L=L)


@dataclass(frozen=True, eq=False)
class ConcatHash:
    """``k`` sampled coordinates; ``g(x)`` is ``x`` read at those coordinates."""

    coords: np.ndarray

    def __call__(self, x) -> tuple[int, ...]:
        return tuple(int(b) for b in np.asarray(x)[self.coords])

    @property
    def support(self) -> frozenset[int]:
        return frozenset(int(i) for i in self.coords)


def sample_hash(params: LshParams, rng: np.random.Generator) -> ConcatHash:
    """Draw ``k`` coordinates i.i.d. uniform on ``[d]`` (with replacement)."""
    coords = rng.integers(0, params.d, size=params.k)
    coords.flags.writeable = False
    return ConcatHash(coords)


def support_size(g: ConcatHash) -> int:
    return int(np.unique(g.coords).size)


class LshIndex:
    """Hash tables over a dataset for a fixed multiset of concatenated hashes.

    Each table maps a bucket key to the ids of the points stored in it, in
    insertion (id) order.  ``query_count`` counts calls to :meth:`query`.
    """

    def __init__(self, dataset: Dataset, params: LshParams, hashes: Sequence[ConcatHash]):
        if dataset.d != params.d:
            raise ValueError("dimension mismatch between dataset and params")
        self.dataset = dataset
        self.params = params
        self.hashes = list(hashes)
        self._lock = threading.Lock()
        self._query_count = 0
        k = params.k
        if any(len(g.coords) != k for g in self.hashes):
            raise ValueError("every hash must sample exactly k coordinates")
        self._word_keys = k <= WORD_KEY_BITS
        if self.hashes:
            self._coords = np.stack([g.coords for g in self.hashes])
        else:
            self._coords = np.zeros((0, k), dtype=np.int64)
        self._weights = np.left_shift(np.uint64(1), np.arange(min(k, 64), dtype=np.uint64))
        self._fweights = self._weights.astype(np.float64)
        self._radius = params.far_radius
        self._build_tables()

    @property
    def L(self) -> int:
        return len(self.hashes)

    @property
    def query_count(self) -> int:
        return self._query_count

    def _keys(self, bits: np.ndarray):
        """Bucket keys of one point (shape ``(L,)``) or of a matrix (``(n, L)``)."""
        proj = bits[..., self._coords]
        if self.params.k <= FLOAT_KEY_BITS:
            return (proj @ self._fweights).astype(np.uint64)
        if self._word_keys:
            return (proj.astype(np.uint64) * self._weights).sum(axis=-1, dtype=np.uint64)
        packed = np.packbits(proj, axis=-1)
        return packed

    def _build_tables(self) -> None:
        n = self.dataset.n
        self._tables: list[dict] = []
        self._orders: list[np.ndarray] = []
        self._bounds: list[np.ndarray] = []
        if not self.hashes:
            return
        keys = self._keys(self.dataset.bits)
        if self._word_keys:
            keys_by_g = np.ascontiguousarray(keys.T)
            orders = np.argsort(keys_by_g, axis=1, kind="stable")
            sorted_keys = np.take_along_axis(keys_by_g, orders, axis=1)
            for g in range(self.L):
                sk = sorted_keys[g]
                starts = np.flatnonzero(np.r_[True, sk[1:] != sk[:-1]])
                self._tables.append(dict(zip(sk[starts].tolist(), range(starts.size))))
                self._orders.append(orders[g])
                self._bounds.append(np.r_[starts, n])
        else:
            for g in range(self.L):
                buckets: dict[bytes, list[int]] = {}
                for i in range(n):
                    buckets.setdefault(keys[i, g].tobytes(), []).append(i)
                order = np.fromiter((i for ids in buckets.values() for i in ids), dtype=np.int64, count=n)
                sizes = [len(ids) for ids in buckets.values()]
                self._tables.append({key: b for b, key in enumerate(buckets)})
                self._orders.append(order)
                self._bounds.append(np.r_[0, np.cumsum(sizes)])

    def bucket_keys(self, q) -> list:
        """Hashable bucket key of ``q`` under every ``g``, in stored order."""
        keys = self._keys(np.asarray(q, dtype=np.uint8))
        if self._word_keys:
            return keys.tolist()
        return [row.tobytes() for row in keys]

    def bucket(self, g: int, key) -> np.ndarray:
        """Ids stored under ``key`` in table ``g`` (empty if absent)."""
        b = self._tables[g].get(key)
        if b is None:
            return np.zeros(0, dtype=np.int64)
        return self._orders[g][self._bounds[g][b]:self._bounds[g][b + 1]]

    def tables(self) -> list[dict]:
        """Materialized tables: one ``{key: [ids]}`` dict per hash function."""
        out = []
        for g, table in enumerate(self._tables):
            out.append({key: self.bucket(g, key).tolist() for key in table})
        return out

    def query(self, q) -> int | None:
        """Id of the first colliding point within ``c*r`` of ``q``, else ``None``."""
        q = np.asarray(q, dtype=np.uint8)
        if q.shape != (self.params.d,):
            raise ValueError("dimension mismatch")
        with self._lock:
            self._query_count += 1
        if not self.hashes:
            return None
        keys = self.bucket_keys(q)
        packed_q = pack_bits(q)
        near = None
        for g, key in enumerate(keys):
            b = self._tables[g].get(key)
            if b is None:
                continue
            ids = self._orders[g][self._bounds[g][b]:self._bounds[g][b + 1]]
            if near is not None:
                hit = near[ids]
            elif ids.size <= _SMALL_BUCKET:
                hit = self.dataset.distances_from_packed(packed_q, ids) <= self._radius
            else:
                near = self.dataset.distances_from_packed(packed_q) <= self._radius
                hit = near[ids]
            if hit.any():
                return int(ids[hit.argmax()])
        return None

    def coll_set(self, p, q) -> set[int]:
        """Indices of the hash functions under which ``p`` and ``q`` collide.

        Diagnostic only; does not count as a query.
        """
        if not self.hashes:
            return set()
        kp = self._keys(np.asarray(p, dtype=np.uint8))
        kq = self._keys(np.asarray(q, dtype=np.uint8))
        eq = kp == kq
        if eq.ndim > 1:
            eq = eq.all(axis=-1)
        return set(np.flatnonzero(eq).tolist())

    def supports(self) -> list[int]:
        return [support_size(g) for g in self.hashes]


def build_index(dataset: Dataset, params: LshParams, rng: np.random.Generator) -> LshIndex:
    if dataset.n != params.n:
        raise ValueError(f"dataset has {dataset.n} points, params expect {params.n}")
    if dataset.d != params.d:
        raise ValueError("dimension mismatch between dataset and params")
    hashes = [sample_hash(params, rng) for _ in range(params.L)]
    return LshIndex(dataset, params, hashes)


def coll_set(index: LshIndex, p, q) -> set[int]:
    return index.coll_set(p, q)
