import itertools
import math
import random
from bisect import bisect_left, bisect_right

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamquantiles import GKSummary


def positions(stream, y):
    """Sorted positions (1-based) occupied by ``y`` in ``stream``: brute force."""
    ordered = sorted(stream)
    return bisect_left(ordered, y) + 1, bisect_right(ordered, y)


def rank_error(stream, y, rho):
    lo, hi = positions(stream, y)
    assert lo <= hi, "answer must be an inserted item"
    return max(0, lo - rho, rho - hi)


def build(stream, eps):
    s = GKSummary(eps)
    for x in stream:
        s.insert(x)
    return s


def test_new_is_empty():
    s = GKSummary(0.0125)
    assert s.count == 0
    assert s.tuple_count == 0


@pytest.mark.parametrize("eps", [0.6, 0.0, -0.1, 1.0])
def test_new_rejects_bad_epsilon(eps):
    with pytest.raises(ValueError):
        GKSummary(eps)


def test_new_accepts_half():
    assert GKSummary(0.5).count == 0


def test_insert_counts_and_compresses():
    s = build(range(1, 101), 0.1)
    assert s.count == 100
    assert s.tuple_count < 100


def test_repeated_value():
    s = build([42] * 50, 0.1)
    assert {s.query(r) for r in range(1, 51)} == {42}


def test_sorted_median():
    s = build(range(1, 1001), 0.05)
    assert 450 <= s.query(500) <= 550


def test_singleton():
    s = build([7], 0.1)
    assert [s.query(r) for r in (-5, 1, 2, 100)] == [7, 7, 7, 7]


def test_rank_one_random_order():
    stream = list(range(1, 65))
    random.Random(3).shuffle(stream)
    s = build(stream, 0.5)
    y = s.query(1)
    assert positions(stream, y)[1] <= 33


def test_query_empty_raises():
    with pytest.raises(ValueError):
        GKSummary(0.1).query(1)
    with pytest.raises(ValueError):
        GKSummary(0.1).query_many([1])


def test_compress_empty_is_noop():
    s = GKSummary(0.1)
    s.compress()
    assert s.tuples == []


def test_compress_idempotent():
    stream = np.random.default_rng(5).integers(0, 1000, 5000).tolist()
    s = build(stream, 0.02)
    s.compress()
    once = s.tuples
    s.compress()
    assert s.tuples == once


def test_large_uniform_space():
    stream = np.random.default_rng(11).integers(0, 2**62, 100_000).tolist()
    s = build(stream, 0.0125)
    # no-compress bound is n tuples; the summary stays orders of magnitude below
    assert s.tuple_count < 1000


def test_sizes():
    s = GKSummary(0.1)
    for x in (3, 1, 2):
        s.insert(x)
    assert s.count == 3 == len(s)
    assert s.tuple_count <= s.count


@pytest.mark.parametrize("eps", [0.5, 0.25, 0.1, 0.01])
def test_tuple_invariants(eps):
    stream = np.random.default_rng(2).integers(0, 50, 3000).tolist()
    s = GKSummary(eps)
    for x in stream:
        s.insert(x)
        tup = s.tuples
        assert sum(t.g for t in tup) == s.count
        assert [t.value for t in tup] == sorted(t.value for t in tup)
        assert all(t.g >= 1 and t.delta >= 0 for t in tup)
        assert tup[0].value == min(stream[:s.count])
        assert tup[-1].value == max(stream[:s.count]) and tup[-1].delta == 0
    s.compress()
    cap = math.floor(2 * eps * s.count)
    assert all(t.g + t.delta <= max(cap, 1) for t in s.tuples)
    assert all(t.g + t.delta <= cap + 1 for t in s.tuples)


@pytest.mark.parametrize("eps", [0.5, 0.25])
def test_exhaustive_small_streams(eps):
    for n in range(1, 6):
        for stream in itertools.product(range(1, 7), repeat=n):
            s = build(stream, eps)
            for rho in range(1, n + 1):
                assert rank_error(stream, s.query(rho), rho) <= eps * n, (stream, rho)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=1, max_size=12), st.sampled_from([0.5, 0.25]))
def test_small_streams_property(stream, eps):
    s = build(stream, eps)
    n = len(stream)
    for rho in range(1, n + 1):
        assert rank_error(stream, s.query(rho), rho) <= eps * n


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=2000),
       st.sampled_from([0.5, 0.2, 0.05, 0.01]))
def test_contract_and_monotone(stream, eps):
    s = build(stream, eps)
    n = len(stream)
    ordered = sorted(stream)
    rhos = list(range(1, n + 1, max(1, n // 97)))
    answers = s.query_many(rhos)
    assert answers == [s.query(r) for r in rhos]
    assert answers == sorted(answers)
    for rho, y in zip(rhos, answers):
        lo, hi = bisect_left(ordered, y) + 1, bisect_right(ordered, y)
        assert max(0, lo - rho, rho - hi) <= eps * n


@pytest.mark.parametrize("eps", [0.1, 0.01])
def test_randomized_large_n(eps):
    rhos = [round(k * 1000) for k in range(1, 100)]
    for seed in range(3):
        stream = np.random.default_rng(seed).integers(0, 2**62, 100_000)
        s = GKSummary(eps)
        s.extend(stream.tolist())
        ordered = np.sort(stream)
        ys = np.array(s.query_many(rhos))
        lo = np.searchsorted(ordered, ys, "left") + 1
        hi = np.searchsorted(ordered, ys, "right")
        err = np.maximum(0, np.maximum(lo - rhos, rhos - hi))
        assert err.max() <= eps * 100_000


def test_deterministic():
    stream = np.random.default_rng(9).integers(0, 100, 10_000).tolist()
    a, b = build(stream, 0.03), build(stream, 0.03)
    assert a == b
    assert a.query_many(range(1, 10_001, 37)) == b.query_many(range(1, 10_001, 37))


def test_copy_is_independent():
    a = build(range(100), 0.1)
    b = a.copy()
    assert a == b
    b.insert(1000)
    assert a != b and a.count == 100


def test_generic_ordered_items():
    words = [f"w{i:04d}" for i in range(500)]
    random.Random(1).shuffle(words)
    s = build(words, 0.05)
    y = s.query(250)
    assert abs(int(y[1:]) + 1 - 250) <= 0.05 * 500


def test_quantile_phi():
    s = build(range(1, 1001), 0.01)
    assert abs(s.quantile(0.25) - 250) <= 10
    with pytest.raises(ValueError):
        s.quantile(0)


@pytest.mark.slow
def test_space_grows_logarithmically():
    eps = 0.01
    rng = np.random.default_rng(4)
    small = GKSummary(eps)
    small.extend(rng.integers(0, 2**62, 10**4).tolist())
    big = GKSummary(eps)
    big.extend(np.random.default_rng(4).integers(0, 2**62, 10**6).tolist())
    log_ratio = math.log(1e6 * eps) / math.log(1e4 * eps)
    assert big.tuple_count / small.tuple_count <= 2 * log_ratio
