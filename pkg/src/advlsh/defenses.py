"""Robustified query wrappers over several independently built LSH copies.

Both wrappers expose the same ``query`` / ``params`` / ``dataset`` surface as
:class:`~advlsh.index.LshIndex`, so the attacks run against them unchanged.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .datasets import Dataset
from .index import LshIndex, LshParams, build_index

__all__ = [
    "DEFAULT_ALPHA",
    "sample_two_sided_geometric",
    "two_sided_geometric_pmf",
    "ResampledIndex",
    "DpIndex",
    "build_resampled",
    "build_dp",
    "query_resampled",
    "query_dp",
]

DEFAULT_ALPHA = math.exp(-0.25)


def two_sided_geometric_pmf(z: int, alpha: float) -> float:
    return (1 - alpha) / (1 + alpha) * alpha ** abs(z)


def sample_two_sided_geometric(alpha: float, rng: np.random.Generator, size=None):
    """Integer noise with ``P[Z = z] = (1-alpha)/(1+alpha) * alpha**|z|``.

    Drawn as the difference of two i.i.d. geometric variables counting
    failures before the first success (success probability ``1 - alpha``).
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    a = rng.geometric(1 - alpha, size=size) - 1
    b = rng.geometric(1 - alpha, size=size) - 1
    if size is None:
        return int(a - b)
    return a - b


class ResampledIndex:
    """Answers each query from ``query_samples`` copies drawn without replacement.

    The answer is the first non-empty copy answer in sampling order.
    """

    def __init__(self, copies: Sequence[LshIndex], query_samples: int,
                 rng: np.random.Generator):
        copies = list(copies)
        if not 1 <= query_samples <= len(copies):
            raise ValueError("need 1 <= query_samples <= number of copies")
        self.copies = copies
        self.query_samples = int(query_samples)
        self.rng = rng
        self.query_count = 0

    @property
    def params(self) -> LshParams:
        return self.copies[0].params

    @property
    def dataset(self) -> Dataset:
        return self.copies[0].dataset

    @property
    def hash_budget(self) -> int:
        return sum(c.L for c in self.copies)

    def _sample(self, rng) -> list[LshIndex]:
        picks = rng.choice(len(self.copies), size=self.query_samples, replace=False)
        return [self.copies[i] for i in picks]

    def query(self, q, rng: np.random.Generator | None = None) -> int | None:
        rng = self.rng if rng is None else rng
        self.query_count += 1
        # every sampled copy is queried so per-copy counters stay exact
        answers = [copy.query(q) for copy in self._sample(rng)]
        return next((pid for pid in answers if pid is not None), None)


class DpIndex(ResampledIndex):
    """Noisy majority vote between copies that found a point and copies that did not.

    Both counts get independent two-sided geometric noise; the query returns
    nothing when the noisy failure count is strictly larger, and otherwise
    the first point found (nothing if no sampled copy found one).
    """

    def __init__(self, copies: Sequence[LshIndex], query_samples: int,
                 rng: np.random.Generator, alpha: float = DEFAULT_ALPHA):
        super().__init__(copies, query_samples, rng)
        if not 0 < alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        self.alpha = float(alpha)

    def query(self, q, rng: np.random.Generator | None = None) -> int | None:
        rng = self.rng if rng is None else rng
        self.query_count += 1
        answers = [copy.query(q) for copy in self._sample(rng)]
        found = [pid for pid in answers if pid is not None]
        if not self.vote(len(found), len(answers) - len(found), rng) or not found:
            return None
        return found[0]

    def vote(self, successes: int, failures: int, rng: np.random.Generator) -> bool:
        """Noisy comparison; ``False`` means answer with nothing.  Ties favour a point."""
        noisy_s = successes + sample_two_sided_geometric(self.alpha, rng)
        noisy_f = failures + sample_two_sided_geometric(self.alpha, rng)
        return not noisy_f > noisy_s


def _build_copies(dataset: Dataset, params: LshParams, copies: int,
                  rng: np.random.Generator) -> list[LshIndex]:
    if copies < 1:
        raise ValueError("need at least one copy")
    base = params if params.lam == 1 else params.with_lambda(1.0)
    return [build_index(dataset, base, rng) for _ in range(copies)]


def build_resampled(dataset: Dataset, params: LshParams, copies: int, query_samples: int,
                    rng: np.random.Generator) -> ResampledIndex:
    """``copies`` independent lambda=1 indexes over the same points."""
    if not 1 <= query_samples <= copies:
        raise ValueError("need 1 <= query_samples <= copies")
    return ResampledIndex(_build_copies(dataset, params, copies, rng), query_samples, rng)


def build_dp(dataset: Dataset, params: LshParams, copies: int, query_samples: int,
             rng: np.random.Generator, alpha: float = DEFAULT_ALPHA) -> DpIndex:
    if not 1 <= query_samples <= copies:
        raise ValueError("need 1 <= query_samples <= copies")
    return DpIndex(_build_copies(dataset, params, copies, rng), query_samples, rng, alpha)


def query_resampled(idx: ResampledIndex, q, rng: np.random.Generator) -> int | None:
    return ResampledIndex.query(idx, q, rng)


def query_dp(idx: DpIndex, q, rng: np.random.Generator) -> int | None:
    return idx.query(q, rng)
