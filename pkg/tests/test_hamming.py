import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from advlsh.hamming import (
    as_point,
    child_rng,
    child_seed,
    distance,
    distances_packed,
    flip_agreement_bits,
    flip_random_agreement_bit,
    make_rng,
    midpoint_toward,
    pack_bits,
    sample_at_distance,
)
from conftest import bits

points = st.integers(1, 70).flatmap(
    lambda d: st.tuples(*(st.lists(st.integers(0, 1), min_size=d, max_size=d) for _ in range(3)))
)


@pytest.mark.parametrize("p, q, expected", [("0000", "0000", 0), ("0000", "1111", 4), ("0101", "0011", 2)])
def test_distance_examples(p, q, expected):
    assert distance(bits(p), bits(q)) == expected


def test_distance_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        distance(bits("01"), bits("011"))


def test_distance_is_metric_exhaustive():
    d = 4
    cube = [np.array(v, dtype=np.uint8) for v in itertools.product((0, 1), repeat=d)]
    for a in cube:
        for b in cube:
            dab = distance(a, b)
            assert dab == distance(b, a)
            assert (dab == 0) == bool(np.array_equal(a, b))
            for c in cube:
                assert distance(a, c) <= dab + distance(b, c)


@given(points)
def test_packed_distance_matches_positional(triple):
    p, q, _ = (np.array(x, dtype=np.uint8) for x in triple)
    assert distances_packed(pack_bits(p[None, :]), pack_bits(q))[0] == distance(p, q)


def test_as_point_validates():
    assert as_point("0110").tolist() == [0, 1, 1, 0]
    with pytest.raises(ValueError):
        as_point([0, 2])
    with pytest.raises(ValueError, match="dimension mismatch"):
        as_point("01", dim=3)
    assert not as_point("01").flags.writeable


def test_sample_at_distance_trivial_cases():
    rng = make_rng(0)
    z = bits("0110")
    assert np.array_equal(sample_at_distance(z, 0, rng), z)
    assert sample_at_distance(bits("000"), 3, rng).tolist() == [1, 1, 1]
    with pytest.raises(ValueError):
        sample_at_distance(z, 5, rng)


def test_sample_at_distance_neighbors_uniform():
    rng = make_rng(1)
    z = bits("0000")
    counts = Counter(int(np.argmax(sample_at_distance(z, 1, rng))) for _ in range(100_000))
    for i in range(4):
        assert abs(counts[i] / 100_000 - 0.25) <= 0.01


@pytest.mark.parametrize("d, m", [(5, 2), (6, 3)])
def test_sample_at_distance_chi_square(d, m):
    rng = make_rng(2)
    z = np.zeros(d, dtype=np.uint8)
    sphere = list(itertools.combinations(range(d), m))
    counts = Counter(tuple(np.flatnonzero(sample_at_distance(z, m, rng))) for _ in range(100_000))
    assert set(counts) == set(sphere)
    assert chisquare([counts[s] for s in sphere]).pvalue > 0.001


def test_flip_random_agreement_bit_cases():
    rng = make_rng(3)
    out, j = flip_random_agreement_bit(bits("01"), bits("00"), rng)
    assert out.tolist() == [1, 1] and j == 0
    with pytest.raises(ValueError, match="no agreement coordinates"):
        flip_random_agreement_bit(bits("11"), bits("00"), rng)
    counts = Counter(flip_random_agreement_bit(bits("00"), bits("00"), rng)[1] for _ in range(10_000))
    assert abs(counts[0] / 10_000 - 0.5) <= 0.02


def test_flip_agreement_bits_cases():
    rng = make_rng(4)
    q = bits("0000")
    assert np.array_equal(flip_agreement_bits(q, q, 0, rng), q)
    assert flip_agreement_bits(q, q, 4, rng).tolist() == [1, 1, 1, 1]
    with pytest.raises(ValueError):
        flip_agreement_bits(bits("0110"), bits("0000"), 3, rng)
    counts = Counter(tuple(flip_agreement_bits(q, q, 2, rng)) for _ in range(10_000))
    assert len(counts) == 6
    for c in counts.values():
        assert abs(c / 10_000 - 1 / 6) <= 0.02


@settings(max_examples=200)
@given(points, st.integers(0, 2**32))
def test_flip_agreement_bits_moves_away_exactly(triple, seed):
    q, z, _ = (np.array(x, dtype=np.uint8) for x in triple)
    free = int(np.sum(q == z))
    count = seed % (free + 1)
    out = flip_agreement_bits(q, z, count, make_rng(seed))
    assert distance(out, z) == distance(q, z) + count
    assert distance(out, q) == count


@pytest.mark.parametrize("left, right, expected", [("0000", "0011", "0010"), ("00", "11", "10")])
def test_midpoint_examples(left, right, expected):
    assert "".join(map(str, midpoint_toward(bits(left), bits(right)))) == expected


def test_midpoint_adjacent_is_error():
    with pytest.raises(ValueError, match="already adjacent"):
        midpoint_toward(bits("0"), bits("1"))


@given(points)
def test_midpoint_halves(triple):
    a, b, _ = (np.array(x, dtype=np.uint8) for x in triple)
    dab = distance(a, b)
    if dab < 2:
        return
    mid = midpoint_toward(a, b)
    assert distance(mid, b) == dab - dab // 2
    assert distance(mid, a) == dab // 2
    assert np.array_equal(midpoint_toward(a, b), mid)


def test_child_streams_reproducible_and_distinct():
    assert child_seed(7, 1, 2) == child_seed(7, 1, 2)
    assert child_seed(7, 1, 2) != child_seed(7, 2, 1)
    a = child_rng(7, 3).integers(0, 2**62, size=5)
    b = child_rng(7, 3).integers(0, 2**62, size=5)
    assert np.array_equal(a, b)
