"""Synthetic point sets, the point-set text format and simple encoders."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .hamming import distances_packed, pack_bits

DEFAULT_SIZE_CAP = 10_000


@dataclass(frozen=True, eq=False)
class Dataset:
    """An immutable multiset of ``n`` points in {0,1}^d.

    ``bits`` is an ``(n, d)`` uint8 matrix; ``packed`` caches the word-packed
    rows used for bulk distance scans.
    """

    bits: np.ndarray
    name: str = "points"
    packed: np.ndarray = field(init=False, repr=False)
    _distinct: np.ndarray = field(init=False, repr=False)
    _inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[0] < 1 or bits.shape[1] < 1:
            raise ValueError("a dataset needs at least one point of dimension >= 1")
        if np.any(bits > 1):
            raise ValueError("point coordinates must be 0 or 1")
        bits.flags.writeable = False
        packed = pack_bits(bits)
        packed.flags.writeable = False
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "packed", packed)
        # duplicate rows are common (e.g. the zero dataset); scan distinct rows only
        distinct, inverse = np.unique(packed, axis=0, return_inverse=True)
        object.__setattr__(self, "_distinct", distinct)
        object.__setattr__(self, "_inverse", inverse.reshape(-1))

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    @property
    def d(self) -> int:
        return self.bits.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> np.ndarray:
        return self.bits[i]

    def distances_to(self, q) -> np.ndarray:
        """Hamming distance from ``q`` to every point, as an int64 array."""
        q = np.asarray(q, dtype=np.uint8)
        if q.shape != (self.d,):
            raise ValueError("dimension mismatch")
        return distances_packed(self._distinct, pack_bits(q))[self._inverse]

    def distances_from_packed(self, packed_q: np.ndarray, ids=None) -> np.ndarray:
        """Distances from an already packed query, optionally for ``ids`` only."""
        if ids is None:
            return distances_packed(self._distinct, packed_q)[self._inverse]
        return distances_packed(self.packed[ids], packed_q)

    def has_point_within(self, q, radius: int) -> bool:
        return bool(np.any(self.distances_to(q) <= radius))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(
            np.array_equal(self.bits, other.bits)
        )

    __hash__ = None


def gen_zero(n: int, d: int) -> Dataset:
    """``n`` copies of the all-zero point."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    return Dataset(np.zeros((n, d), dtype=np.uint8), name="zero")


def gen_random(n: int, d: int, rng: np.random.Generator) -> Dataset:
    """i.i.d. uniform bits."""
    return gen_sparse_random(n, d, 0.5, rng, name="random")


def gen_sparse_random(
    n: int, d: int, p: float, rng: np.random.Generator, name: str = "sparse"
) -> Dataset:
    """i.i.d. Bernoulli(p) bits; the sparse dataset uses ``p = 1/15``."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    bits = (rng.random((n, d)) < p).astype(np.uint8)
    return Dataset(bits, name=name)


def load_points(path: str | os.PathLike, limit: int | None = DEFAULT_SIZE_CAP) -> Dataset:
    """Read the point-set text format.

    One point per line as a string of ``0``/``1`` characters; blank lines and
    lines starting with ``#`` are skipped.  At most ``limit`` points are kept
    (``None`` keeps all of them).
    """
    rows: list[list[int]] = []
    d = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            bad = set(line) - {"0", "1"}
            if bad:
                raise ValueError(
                    f"{path}:{lineno}: invalid character {sorted(bad)[0]!r}"
                )
            if d is None:
                d = len(line)
            elif len(line) != d:
                raise ValueError(
                    f"{path}:{lineno}: expected {d} bits, found {len(line)}"
                )
            if limit is None or len(rows) < limit:
                rows.append([ord(ch) - 48 for ch in line])
    if not rows:
        raise ValueError(f"{path}: no points found")
    name = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return Dataset(np.array(rows, dtype=np.uint8), name=name)


def format_points(dataset: Dataset) -> str:
    return "".join("".join("01"[b] for b in row) + "\n" for row in dataset.bits)


def save_points(dataset: Dataset, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_points(dataset))


def one_hot_encode(rows: Sequence[Sequence[str]], name: str = "one-hot") -> Dataset:
    """One-hot encode a table of categorical values.

    Vocabularies are taken from the data in order of first appearance; the
    blocks are laid out feature by feature.
    """
    rows = [tuple(r) for r in rows]
    if not rows:
        raise ValueError("no rows to encode")
    arity = len(rows[0])
    if any(len(r) != arity for r in rows):
        raise ValueError("all rows must have the same number of features")
    vocabs: list[dict[str, int]] = [{} for _ in range(arity)]
    for r in rows:
        for j, v in enumerate(r):
            vocabs[j].setdefault(v, len(vocabs[j]))
    offsets = np.cumsum([0] + [len(v) for v in vocabs])
    bits = np.zeros((len(rows), int(offsets[-1])), dtype=np.uint8)
    for i, r in enumerate(rows):
        for j, v in enumerate(r):
            bits[i, offsets[j] + vocabs[j][v]] = 1
    return Dataset(bits, name=name)


def threshold_binarize(values, threshold: float = 0.0, name: str = "binarized") -> Dataset:
    """Set a bit wherever the value is strictly above ``threshold``."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    return Dataset((values > threshold).astype(np.uint8), name=name)


def read_delimited(path: str | os.PathLike, delimiter: str = ",") -> list[list[str]]:
    """Rows of a delimiter-separated file, skipping blanks and ``#`` lines."""
    with open(path, encoding="utf-8", newline="") as fh:
        return [
            [cell.strip() for cell in row]
            for row in csv.reader(fh, delimiter=delimiter)
            if row and any(cell.strip() for cell in row) and not row[0].lstrip().startswith("#")
        ]


def generate(kind: str, n: int, d: int, rng: np.random.Generator, p: float = 1 / 15) -> Dataset:
    """Dispatch on a generator name: ``zero``, ``random`` or ``sparse``."""
    if kind == "zero":
        return gen_zero(n, d)
    if kind == "random":
        return gen_random(n, d, rng)
    if kind == "sparse":
        return gen_sparse_random(n, d, p, rng)
    raise ValueError(f"unknown dataset generator {kind!r}")

