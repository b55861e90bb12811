"""Bit-vector points in {0,1}^d, Hamming distance and random point moves.

Points are read-only 1-D ``uint8`` numpy arrays holding 0/1 values.  Bulk
distance computations work on word-packed copies (see :func:`pack_bits`).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "as_point",
    "pack_bits",
    "distance",
    "distances_packed",
    "make_rng",
    "child_seed",
    "child_rng",
    "sample_at_distance",
    "flip_random_agreement_bit",
    "flip_agreement_bits",
    "midpoint_toward",
]


def as_point(bits, dim: int | None = None) -> np.ndarray:
    """Validate ``bits`` and return it as an immutable uint8 point.

    Accepts any 1-D sequence of 0/1 values or a string such as ``"0101"``.
    """
    if isinstance(bits, str):
        bits = [int(ch) for ch in bits]
    arr = np.array(bits, dtype=np.uint8)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("a point must be a non-empty 1-D bit sequence")
    if np.any(arr > 1):
        raise ValueError("point coordinates must be 0 or 1")
    if dim is not None and arr.size != dim:
        raise ValueError("dimension mismatch")
    arr.flags.writeable = False
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack the last axis of a 0/1 array into little-endian uint64 words."""
    bits = np.asarray(bits, dtype=np.uint8)
    d = bits.shape[-1]
    if bits.ndim == 1:
        buf = np.zeros(-(-d // 64) * 64, dtype=np.uint8)
        buf[:d] = bits
        return np.packbits(buf, bitorder="little").view(np.uint64)
    pad = (-d) % 64
    if pad:
        widths = [(0, 0)] * (bits.ndim - 1) + [(0, pad)]
        bits = np.pad(bits, widths)
    packed = np.packbits(bits, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed).view(np.uint64)


def distance(p, q) -> int:
    """Number of coordinates where ``p`` and ``q`` differ."""
    p = np.asarray(p)
    q = np.asarray(q)
    if p.shape != q.shape:
        raise ValueError("dimension mismatch")
    return int(np.count_nonzero(p != q))


def distances_packed(packed_points: np.ndarray, packed_q: np.ndarray) -> np.ndarray:
    """Distances from one packed point to every row of a packed matrix."""
    return np.bitwise_count(packed_points ^ packed_q).sum(axis=-1, dtype=np.int64)


def make_rng(seed: int | None = None) -> np.random.Generator:
    return np.random.default_rng(seed)


def child_seed(master_seed: int, *keys: int) -> int:
    """64-bit seed for the stream identified by ``(master_seed, *keys)``.

    The keys (trial index, stream purpose, ...) are appended to the master
    seed as extra entropy words of a :class:`numpy.random.SeedSequence`, so a
    trial can be regenerated on its own, in any process and in any order.
    """
    words = [int(master_seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)]
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


def child_rng(master_seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(child_seed(master_seed, *keys))


def sample_at_distance(z, m: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random point on the Hamming sphere of radius ``m`` around ``z``."""
    z = np.asarray(z, dtype=np.uint8)
    d = z.size
    if not 0 <= m <= d:
        raise ValueError(f"distance {m} out of range [0, {d}]")
    q = z.copy()
    idx = rng.choice(d, size=m, replace=False)
    q[idx] ^= 1
    return _frozen(q)


def flip_random_agreement_bit(q, z, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Flip one coordinate where ``q`` agrees with ``z``, chosen uniformly."""
    q = np.asarray(q, dtype=np.uint8)
    z = np.asarray(z, dtype=np.uint8)
    if q.shape != z.shape:
        raise ValueError("dimension mismatch")
    agree = np.flatnonzero(q == z)
    if agree.size == 0:
        raise ValueError("no agreement coordinates")
    j = int(agree[rng.integers(agree.size)])
    out = q.copy()
    out[j] ^= 1
    return _frozen(out), j


def flip_agreement_bits(q, z, count: int, rng: np.random.Generator) -> np.ndarray:
    """Flip ``count`` distinct agreement coordinates of ``q`` (w.r.t. ``z``)."""
    q = np.asarray(q, dtype=np.uint8)
    z = np.asarray(z, dtype=np.uint8)
    if q.shape != z.shape:
        raise ValueError("dimension mismatch")
    agree = np.flatnonzero(q == z)
    if not 0 <= count <= agree.size:
        raise ValueError(
            f"cannot flip {count} bits: only {agree.size} agreement coordinates"
        )
    out = q.copy()
    out[rng.choice(agree, size=count, replace=False)] ^= 1
    return _frozen(out)


def midpoint_toward(q_left, q_right) -> np.ndarray:
    """Move ``q_left`` half way toward ``q_right``.

    Flips the floor(dist/2) lowest-index coordinates on which the two points
    differ, so the result is a deterministic function of its inputs.
    """
    q_left = np.asarray(q_left, dtype=np.uint8)
    q_right = np.asarray(q_right, dtype=np.uint8)
    if q_left.shape != q_right.shape:
        raise ValueError("dimension mismatch")
    diff = np.flatnonzero(q_left != q_right)
    if diff.size < 2:
        raise ValueError("already adjacent")
    out = q_left.copy()
    out[diff[: diff.size // 2]] ^= 1
    return _frozen(out)
