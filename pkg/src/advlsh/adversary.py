"""Adaptive walks that drive an LSH index into a false negative.

The attacks see the index only through its ``query`` method together with
the public inputs (``params`` and the dataset); hash functions and tables
are never read.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .datasets import Dataset
from .hamming import (
    distance,
    flip_agreement_bits,
    flip_random_agreement_bit,
    midpoint_toward,
    sample_at_distance,
)
from .oracles import walk_offset

__all__ = [
    "AttackConfig",
    "AttackOutcome",
    "TraceStep",
    "find_isolated_origin",
    "simple_walk",
    "fast_walk",
    "run_walk",
    "walk_until_success",
    "random_baseline",
    "verify_false_negative",
]

ALGORITHMS = ("simple", "fast")


@dataclass(frozen=True)
class AttackConfig:
    """Knobs of an adaptive walk.

    Unset fields are filled in from the index parameters by :meth:`resolve`:
    ``t = 2e^2(lam+1)``, ``start_distance = max(0, r - round(t))``,
    ``target_distance = r`` and ``max_outer_iterations = ceil(t) + target``.
    """

    algo: str = "fast"
    t: float | None = None
    start_distance: int | None = None
    target_distance: int | None = None
    max_outer_iterations: int | None = None
    trace: bool = False

    def resolve(self, params) -> "AttackConfig":
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown attack algorithm {self.algo!r}")
        t = walk_offset(params.lam) if self.t is None else float(self.t)
        start = self.start_distance
        if start is None:
            start = max(0, params.r - round(t))
        target = params.r if self.target_distance is None else int(self.target_distance)
        if not 0 <= start <= params.r:
            raise ValueError("start_distance must lie in [0, r]")
        if not 0 < target <= params.far_radius:
            raise ValueError("target_distance must lie in (0, c*r]")
        cap = self.max_outer_iterations
        if cap is None:
            cap = math.ceil(t) + target
        return AttackConfig(self.algo, t, start, target, cap, self.trace)


@dataclass
class TraceStep:
    """State at the top of one outer iteration."""

    q: np.ndarray
    distance: int
    queries: int
    widths: list[int] = field(default_factory=list)


@dataclass
class AttackOutcome:
    success: bool
    query: np.ndarray | None
    lsh_queries_used: int
    outer_iterations: int
    trace: list[TraceStep] | None = None
    reason: str = ""


class _BlackBox:
    """Query-only view of an index, counting the queries it relays."""

    def __init__(self, index, z):
        self._query = index.query
        self.params = index.params
        self.dataset: Dataset = index.dataset
        self.z = np.asarray(z, dtype=np.uint8)
        self.used = 0

    def ask(self, q):
        """Returned point (as bits) or ``None``."""
        self.used += 1
        pid = self._query(q)
        return None if pid is None else self.dataset[pid]

    def returns_z(self, answer) -> bool:
        return answer is not None and bool(np.array_equal(answer, self.z))


def find_isolated_origin(dataset: Dataset) -> tuple[np.ndarray, int]:
    """Point whose nearest *distinct* point is farthest away.

    Returns ``(z, isolation)``; when the dataset holds a single distinct
    point the isolation is reported as ``d + 1``.
    """
    if dataset.n < 1:
        raise ValueError("empty dataset")
    d = dataset.d
    distinct, first = np.unique(dataset.packed, axis=0, return_index=True)
    if distinct.shape[0] == 1:
        return dataset[0], d + 1
    order = np.argsort(first)
    distinct, first = distinct[order], first[order]
    best_i, best = 0, -1
    chunk = max(1, 4_000_000 // (distinct.shape[0] * distinct.shape[1]))
    for lo in range(0, distinct.shape[0], chunk):
        block = distinct[lo:lo + chunk]
        dist = np.bitwise_count(block[:, None, :] ^ distinct[None, :, :]).sum(axis=-1)
        dist[np.arange(block.shape[0]), np.arange(lo, lo + block.shape[0])] = d + 1
        mins = dist.min(axis=1)
        i = int(mins.argmax())
        if mins[i] > best:
            best_i, best = lo + i, int(mins[i])
    return dataset[int(first[best_i])], best


def _finish(box: _BlackBox, q, answer, target, iterations, trace, reason="") -> AttackOutcome:
    ok = (
        answer is None
        and distance(q, box.z) <= target
        and box.dataset.has_point_within(q, target)
    )
    if not ok and not reason:
        reason = "not a false negative"
    return AttackOutcome(ok, np.asarray(q) if ok else None, box.used, iterations, trace, reason)


def _fail(box: _BlackBox, iterations, trace, reason) -> AttackOutcome:
    return AttackOutcome(False, None, box.used, iterations, trace, reason)


def simple_walk(index, z, config: AttackConfig, rng: np.random.Generator) -> AttackOutcome:
    """Walk away from ``z``, locating each bit to flip by a linear random walk."""
    cfg = config.resolve(index.params)
    box = _BlackBox(index, z)
    z = box.z
    cr = index.params.far_radius
    trace = [] if cfg.trace else None

    q = np.array(sample_at_distance(z, cfg.start_distance, rng))
    answer = box.ask(q)
    it = 0
    while box.returns_z(answer):
        if it >= cfg.max_outer_iterations:
            return _fail(box, it, trace, "iteration cap")
        dist_q = distance(q, z)
        if dist_q >= cfg.target_distance:
            return _fail(box, it, trace, "reached target distance")
        if trace is not None:
            trace.append(TraceStep(q.copy(), dist_q, box.used))
        it += 1
        # q' starts at q, which is known to return z: flip before the first test
        q_probe, dist_probe, j = q, dist_q, None
        while True:
            if dist_probe + 1 > cr:
                return _fail(box, it, trace, "probe left the far radius")
            q_probe, j = flip_random_agreement_bit(q_probe, z, rng)
            dist_probe += 1
            if not box.returns_z(box.ask(q_probe)):
                break
        q[j] ^= 1
        answer = box.ask(q)
    return _finish(box, q, answer, cfg.target_distance, it, trace)


def fast_walk(index, z, config: AttackConfig, rng: np.random.Generator) -> AttackOutcome:
    """Walk away from ``z``, locating each bit to flip by binary search."""
    cfg = config.resolve(index.params)
    box = _BlackBox(index, z)
    z = box.z
    cr = index.params.far_radius
    trace = [] if cfg.trace else None

    q = np.array(sample_at_distance(z, cfg.start_distance, rng))
    answer = box.ask(q)
    it = 0
    while box.returns_z(answer):
        if it >= cfg.max_outer_iterations:
            return _fail(box, it, trace, "iteration cap")
        dist_q = distance(q, z)
        if dist_q >= cfg.target_distance:
            return _fail(box, it, trace, "reached target distance")
        step = TraceStep(q.copy(), dist_q, box.used)
        if trace is not None:
            trace.append(step)
        it += 1
        left = q
        right = flip_agreement_bits(q, z, cr - dist_q, rng)
        if box.returns_z(box.ask(right)):
            return _fail(box, it, trace, "far point still collides")
        width = cr - dist_q
        while width > 1:
            mid = midpoint_toward(left, right)
            if box.returns_z(box.ask(mid)):
                left = mid
            else:
                right = mid
            width = distance(left, right)
            step.widths.append(width)
        j = int(np.flatnonzero(left != right)[0])
        q[j] ^= 1
        answer = box.ask(q)
    return _finish(box, q, answer, cfg.target_distance, it, trace)


def run_walk(index, z, config: AttackConfig, rng: np.random.Generator) -> AttackOutcome:
    walk = fast_walk if config.algo == "fast" else simple_walk
    return walk(index, z, config, rng)


def walk_until_success(index, z, config: AttackConfig, rng: np.random.Generator,
                       max_attempts: int = 1000) -> AttackOutcome:
    """Restart the walk until it finds a false negative; queries accumulate."""
    used = 0
    iterations = 0
    for _ in range(max_attempts):
        out = run_walk(index, z, config, rng)
        used += out.lsh_queries_used
        iterations += out.outer_iterations
        if out.success:
            return AttackOutcome(True, out.query, used, iterations, out.trace)
    return AttackOutcome(False, None, used, iterations, None, "attempt cap")


def random_baseline(index, z, r: int, rng: np.random.Generator, max_queries: int) -> AttackOutcome:
    """Query uniform points at distance ``r`` from ``z`` until one returns nothing."""
    box = _BlackBox(index, z)
    for _ in range(max_queries):
        q = sample_at_distance(box.z, r, rng)
        if box.ask(q) is None:
            return AttackOutcome(True, np.asarray(q), box.used, 0)
    return AttackOutcome(False, None, box.used, 0, reason="query cap")


def verify_false_negative(index, q, radius: int | None = None) -> bool:
    """True iff ``q`` gets no answer although a point lies within ``radius`` (default r).

    Issues one query; the near-point check is a direct scan of the dataset.
    """
    radius = index.params.r if radius is None else radius
    if index.query(q) is not None:
        return False
    return index.dataset.has_point_within(q, radius)
