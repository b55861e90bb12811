"""Exact collision probabilities and the numeric lemma checks built on them.

Everything here takes *realized* hash supports as input, so these formulas
can be checked independently of the hash sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .index import LshParams

__all__ = [
    "CollisionModel",
    "exact_collision_prob",
    "expected_collisions",
    "expected_support",
    "bottom_probability_single_point",
    "k_bounds",
    "k_bounds_hold",
    "support_lower_bound",
    "near_coll_regime",
    "walk_offset",
]


@dataclass(frozen=True)
class CollisionModel:
    d: int
    s: int
    m: int

    def __post_init__(self):
        if not 0 <= self.s <= self.d:
            raise ValueError("support size must lie in [0, d]")
        if not 0 <= self.m <= self.d:
            raise ValueError("flip count must lie in [0, d]")

    def probability(self) -> float:
        return exact_collision_prob(self.d, self.s, self.m)


def exact_collision_prob(d: int, s: int, m: int) -> float:
    """P[g(q) = g(z)] for ``q`` uniform at distance ``m`` from ``z``.

    That is the chance a uniform ``m``-subset of the ``d`` coordinates misses
    a fixed support of size ``s``: ``C(d-s, m) / C(d, m)``.  Python integers
    keep the binomials exact, so the quotient is correctly rounded.
    """
    if not (0 <= s <= d and 0 <= m <= d):
        raise ValueError("need 0 <= s <= d and 0 <= m <= d")
    if m > d - s:
        return 0.0
    return math.comb(d - s, m) / math.comb(d, m)


def expected_collisions(params: LshParams, m: int, supports: Sequence[int]) -> float:
    """Exact E|Coll(q, z)| for ``q`` uniform at distance ``m``, given supports."""
    if len(supports) != params.L:
        raise ValueError(f"support profile has {len(supports)} entries, expected L={params.L}")
    return math.fsum(exact_collision_prob(params.d, s, m) for s in supports)


def expected_support(d: int, k: int) -> float:
    """Expected number of distinct values among ``k`` uniform draws from ``[d]``."""
    if k < 0 or d < 1:
        raise ValueError("need d >= 1 and k >= 0")
    return d * (1.0 - (1.0 - 1.0 / d) ** k)


def bottom_probability_single_point(params: LshParams, supports: Sequence[int], m: int) -> float:
    """P[query returns nothing] for ``q`` uniform at distance ``m`` from the only point.

    Assumes ``m <= c*r`` so the distance filter never rejects the stored point.
    """
    if len(supports) != params.L:
        raise ValueError(f"support profile has {len(supports)} entries, expected L={params.L}")
    prob = 1.0
    for s in supports:
        prob *= 1.0 - exact_collision_prob(params.d, s, m)
    return prob


def walk_offset(lam: float) -> float:
    """Default walk offset ``t = 2 e^2 (lam + 1)``."""
    return 2.0 * math.e**2 * (lam + 1.0)


def k_bounds(params: LshParams) -> tuple[float, float]:
    """``(0.5, 2) * (d / cr) * ln n``: the bracket k falls in when ``cr/d <= 1/5``."""
    base = params.d / params.cr * math.log(params.n)
    return 0.5 * base, 2.0 * base


def k_bounds_hold(params: LshParams) -> bool:
    lo, hi = k_bounds(params)
    return lo <= params.k <= hi


def support_lower_bound(params: LshParams) -> float:
    """Support size every hash exceeds with probability ``>= 1 - 1/n``."""
    k, n, d = params.k, params.n, params.d
    return k - 7.0 * math.log(n) * max(1.0, k * k / (2.0 * d))


def near_coll_regime(params: LshParams) -> bool:
    """Whether the near-collision bound E|Coll| <= e^2 (lam+1) is guaranteed."""
    n, r, c, d, lam = params.n, params.r, params.c, params.d, params.lam
    ln_n = math.log(n)
    return (
        n > math.e
        and 8 * math.e**2 * (lam + 1) * ln_n <= c * r
        and 28 * ln_n**3 / c**2 <= r <= d / (14 * ln_n)
        and r <= d / (5 * c)
        and c < ln_n
    )
