import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamquantiles import FixedNSummary, GKSummary, default_sample_size, union_bound_sample_size
from streamquantiles.fixed_n import round_half_up


def test_valid_construction():
    s = FixedNSummary(0.1, 10**6, 5000, 42)
    assert s.rate == Fraction(5000, 10**6)
    assert s.gk.epsilon == pytest.approx(0.1 / 8)


def test_m_above_n_rejected():
    with pytest.raises(ValueError):
        FixedNSummary(0.1, 100, 101)


def test_union_bound_sample_size():
    assert union_bound_sample_size(0.1) == math.ceil(300000 * math.log(10) / 0.01)
    assert 6.9e7 <= union_bound_sample_size(0.1) < 7.0e7


def test_default_m_capped_at_n():
    assert FixedNSummary(0.1, 500).m == 500
    assert FixedNSummary(0.1, 10**7).m == default_sample_size(0.1)


def test_rate_one_inserts_everything():
    s = FixedNSummary(0.08, 1000, 1000)
    s.extend(list(range(1000)))
    assert s.gk.count == 1000


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=1, max_size=400))
def test_full_rate_equals_gk(stream):
    n = len(stream)
    s = FixedNSummary(0.08, n, n, seed=5)
    for x in stream:
        s.insert(x)
    g = GKSummary(0.01)
    g.extend(stream)
    assert s.gk == g
    rhos = list(range(1, n + 1))
    assert s.query_many(rhos) == g.query_many(rhos)
    ordered = sorted(stream)
    for rho, y in zip(rhos, s.query_many(rhos)):
        lo = ordered.index(y) + 1
        hi = n - ordered[::-1].index(y)
        assert max(0, lo - rho, rho - hi) <= 0.01 * n


def test_deterministic_and_batch_equals_items():
    xs = np.random.default_rng(0).integers(0, 10**9, 20_000)
    a = FixedNSummary(0.1, 20_000, 2000, seed=9)
    a.extend(xs)
    b = FixedNSummary(0.1, 20_000, 2000, seed=9)
    for x in xs.tolist():
        b.insert(x)
    assert a.gk == b.gk


def test_sample_count_binomial():
    n, m = 10**6, 5000
    s = FixedNSummary(0.1, n, m, seed=1)
    s.extend(np.arange(n))
    assert abs(s.gk.count - m) <= 4 * math.sqrt(m * (1 - m / n))


def test_overflow_rejected():
    s = FixedNSummary(0.1, 10, 5)
    s.extend(list(range(10)))
    with pytest.raises(OverflowError):
        s.insert(11)


def test_query_before_any_sample_raises():
    s = FixedNSummary(0.1, 10**6, 10)
    with pytest.raises(ValueError):
        s.query(1)


def test_guaranteed_flag_and_truncation():
    n = 6400
    s = FixedNSummary(0.1, n, 640, seed=0)
    s.extend(np.arange(1, 100))
    assert not s.guaranteed
    s.insert(100)
    assert s.guaranteed
    # rank n maps to sample rank m, far above the current sample size: truncated
    ans = s.query_detailed(n)
    assert ans.sample_rank == s.gk.count
    assert ans.guaranteed


def test_round_half_up():
    assert [round_half_up(Fraction(k, 2)) for k in range(5)] == [0, 1, 1, 2, 2]


def test_sorted_monte_carlo():
    n, m, eps, rho = 2**20, 2**16, 0.1, 2**19
    xs = np.arange(1, n + 1)
    hits = 0
    for seed in range(100):
        s = FixedNSummary(eps, n, m, seed=seed)
        s.extend(xs)
        hits += abs(s.query(rho) - rho) <= eps * n / 2
    assert hits >= 95
