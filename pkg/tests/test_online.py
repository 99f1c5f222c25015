import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamquantiles import (GKSummary, OnlineConfig, OnlineSummary, ReplacementQueue,
                             generate_replacement, replacement_ranks)
from streamquantiles.online import (active_row_at, activation_time, allocation_time,
                                    live_rows_at, union_bound_row_size, retirement_time, row_divisor)


def test_schedule_helpers():
    m = 64
    assert [allocation_time(r, m) for r in range(4)] == [0, 64, 128, 256]
    assert [activation_time(r, m) for r in range(3)] == [1, 2049, 4097]
    assert [retirement_time(r, m) for r in range(3)] == [2048, 4096, 8192]
    assert row_divisor(0) == 1 and row_divisor(0, True) == 32 and row_divisor(3) == 256


def test_live_window_oracle_small():
    m = 64
    assert live_rows_at(1, m) == [0]
    assert live_rows_at(65, m) == [0, 1]
    assert live_rows_at(2048, m) == [0, 1, 2, 3, 4, 5]
    assert live_rows_at(2049, m) == [1, 2, 3, 4, 5, 6]
    assert active_row_at(2048, m) == 0 and active_row_at(2049, m) == 1


def test_rows_after_row0_retires():
    s = OnlineSummary(epsilon=0.5, m=64, seed=0)
    s.extend(np.arange(2049))
    assert s.stats().live_rows == [1, 2, 3, 4, 5, 6] == live_rows_at(2049, 64)
    assert s.retired_insertions[0] == 2048


def test_fresh_stats():
    st_ = OnlineSummary(epsilon=0.1, m=100).stats()
    assert (st_.t, st_.live_rows, st_.active) == (0, [0], 0)


def test_schedule_every_timestep():
    m = 16
    s = OnlineSummary(epsilon=0.5, m=m, seed=3)
    horizon = retirement_time(8, m)
    for t in range(1, horizon + 1):
        s.insert(t)
        stats = s.stats()
        assert stats.live_rows == live_rows_at(t, m), t
        assert stats.active == active_row_at(t, m), t
        assert len(stats.live_rows) <= 6
        for r in stats.live_rows[1:] if stats.live_rows[0] == 0 else stats.live_rows:
            row = s.row(r)
            expected = min(t, m << r) - (m << (r - 1))
            assert row.replacement.consumed == expected


def test_replacement_consumed_exactly():
    m = 64
    s = OnlineSummary(epsilon=0.5, m=m, seed=1)
    for r in range(1, 6):
        s.extend(np.arange((m << r) - 1 - s.t))
        q = s.row(r).replacement
        assert q.total == m << (r - 1)
        assert q.remaining == 1
        s.insert(0)
        assert q.remaining == 0
        s.insert(0)
        assert q.consumed == q.total


@pytest.mark.parametrize("m", [64, 640])
def test_live_rows_scan(m):
    s = OnlineSummary(epsilon=0.5, m=m, seed=2)
    probes = set(range(1, 10**6, 997))
    for r in range(12):
        for b in (allocation_time(r, m), activation_time(r, m), retirement_time(r, m)):
            probes.update({b - 1, b, b + 1})
    for t in sorted(p for p in probes if 1 <= p <= 10**6):
        s.extend(np.arange(t - s.t))
        assert len(s.stats().live_rows) <= 6
        assert s.stats().live_rows == live_rows_at(t, m)


def test_query_ranks_literal_examples():
    assert replacement_ranks(0.5, 1024, 1, "literal") == list(range(1, 17))
    expected = [max(1, math.floor(Fraction(q, 16) + Fraction(1, 2))) for q in range(1, 17)]
    assert replacement_ranks(0.5, 64, 1, "literal") == expected


def test_query_ranks_scaled_cover_prefix():
    # row 0 is unsampled, so the ranks are the Q-quantiles of its m-item prefix
    assert replacement_ranks(0.5, 1024, 1, "scaled") == [64 * q for q in range(1, 17)]
    # row r-1 has seen 2**(r-1) m items at rate 1/(2**(r-1) 32)
    assert replacement_ranks(0.1, 5120, 3, "scaled") == [
        max(1, round(q * 4 * 5120 / (80 * 128))) for q in range(1, 81)]


def test_queue_duplication():
    g = GKSummary(0.5 / 8)
    g.extend(range(1, 1025))
    q = generate_replacement(g, 0.5, 1024, 1, "literal")
    assert (len(q.q_values), q.dup, q.total) == (16, 64, 1024)
    assert q.expand() == [v for v in q.q_values for _ in range(64)]


def test_queue_dup_for_small_m():
    for r in range(1, 6):
        q = ReplacementQueue(list(range(16)), 64 << (r - 1))
        assert q.dup == (1 << (r - 1)) * 4
        assert len(q.expand()) == q.total


def test_queue_remainder_goes_to_last():
    q = ReplacementQueue([1, 2, 3], 10)
    assert q.expand() == [1, 1, 1, 2, 2, 2, 3, 3, 3, 3]
    assert ReplacementQueue([1, 2, 3], 2).expand() == [1, 2]


def test_generate_from_empty_rejected():
    with pytest.raises(ValueError):
        generate_replacement(GKSummary(0.1), 0.1, 64, 1)


def test_scaled_vs_literal_first_replacement():
    # literal ranks read only the bottom of row 0; scaled ranks span it
    m, eps = 5120, 0.1
    outs = {}
    for mode in ("scaled", "literal"):
        s = OnlineSummary(epsilon=eps, m=m, seed=0, replacement_ranks=mode)
        s.extend(np.arange(1, m + 2))
        outs[mode] = s.row(1).replacement.q_values
    assert max(outs["scaled"]) >= 0.95 * m
    assert max(outs["literal"]) <= m / 32


def test_early_queries_are_pure_gk():
    m = 512
    xs = np.random.default_rng(0).integers(0, 1000, m // 2).tolist()
    s = OnlineSummary(epsilon=0.1, m=m, seed=4)
    g = GKSummary(0.1 / 8)
    for t, x in enumerate(xs, 1):
        s.insert(x)
        g.insert(x)
        assert s.query_many(range(1, t + 1)) == g.query_many(range(1, t + 1))


def test_query_phi():
    s = OnlineSummary(epsilon=0.1, m=5120)
    s.extend(range(1, 101))
    assert s.phi_rank(1) == 100 and s.phi_rank(0.5) == 50
    s2 = OnlineSummary(epsilon=0.1, m=5120)
    s2.extend(range(10))
    assert s2.phi_rank(1e-9) == 1
    for bad in (0, 1.5, -0.1):
        with pytest.raises(ValueError):
            s.query_phi(bad)


def test_query_at_zero_raises():
    with pytest.raises(ValueError):
        OnlineSummary(epsilon=0.1, m=64).query(1)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(1, 3000), min_size=1, max_size=8), st.integers(0, 10))
def test_extend_matches_insert(chunks, seed):
    m = 16
    xs = np.random.default_rng(seed).integers(0, 100, sum(chunks))
    a = OnlineSummary(epsilon=0.5, m=m, seed=seed)
    b = OnlineSummary(epsilon=0.5, m=m, seed=seed)
    pos = 0
    for k in chunks:
        a.extend(xs[pos:pos + k])
        pos += k
    for x in xs.tolist():
        b.insert(x)
    assert a.stats() == b.stats()
    assert all(ra.gk == rb.gk for ra, rb in zip(a.rows, b.rows))
    assert a.query_many(range(1, a.t + 1, 7)) == b.query_many(range(1, b.t + 1, 7))


def test_query_monotone_and_reproducible():
    xs = np.random.default_rng(1).integers(0, 10**6, 200_000)
    a = OnlineSummary(epsilon=0.1, m=1024, seed=8)
    b = OnlineSummary(epsilon=0.1, m=1024, seed=8)
    a.extend(xs)
    b.extend(xs.tolist())
    rhos = list(range(1, a.t + 1, 1000))
    answers = a.query_many(rhos)
    assert answers == sorted(answers)
    assert answers == b.query_many(rhos)


def test_cap_on_sampled_rows():
    m = 32
    s = OnlineSummary(epsilon=0.5, m=m, seed=0)
    s.extend(np.arange(retirement_time(6, m)))
    caps = {**s.retired_insertions, **s.stats().gk_insertions}
    assert all(v <= 2 * m for r, v in caps.items() if r >= 1)


def test_cap_drops_excess_samples():
    # with m = 2 a row often samples more than 2m items; the excess is dropped
    m, hit = 2, 0
    for seed in range(20):
        s = OnlineSummary(epsilon=0.5, m=m, seed=seed, record=True)
        s.extend(np.arange(retirement_time(5, m)))
        for row in s.retired:
            if row.r >= 1:
                assert row.gk.count == min(len(row.samples), 2 * m)
                hit += len(row.samples) > 2 * m
    assert hit > 0


def test_snapshot_is_frozen():
    s = OnlineSummary(epsilon=0.1, m=512)
    s.extend(range(1, 1001))
    snap = s.snapshot()
    before = snap.query(500)
    assert before == s.query(500)
    s.extend(range(10**6, 10**6 + 5000))
    assert snap.query(500) == before and snap.t == 1000


def test_row0_sampled_flag():
    s = OnlineSummary(epsilon=0.5, m=64, seed=0, row0_sampled=True)
    assert s.row(0).divisor == 32 and s.row(0).cap == 128
    s.extend(np.arange(5000))
    assert s.query(2500) is not None


def test_config_validation_and_recommendation():
    with pytest.raises(ValueError):
        OnlineConfig(0.1, 0)
    with pytest.raises(ValueError):
        OnlineConfig(0.1, 64, replacement_ranks="other")
    assert OnlineConfig(0.1, 5120).recommended
    assert not OnlineConfig(0.5, 64).recommended
    assert OnlineConfig(0.3, 5120).num_queries == 27


def test_union_bound_row_size():
    assert 9.2e7 <= union_bound_row_size(0.1) < 9.3e7


def test_sorted_stream_median_monte_carlo():
    eps, m, t = 0.1, 5120, 2**21
    xs = np.arange(1, t + 1)
    ok = 0
    for seed in range(50):
        s = OnlineSummary(epsilon=eps, m=m, seed=seed)
        s.extend(xs)
        ok += abs(s.query(t // 2) - t // 2) <= eps * t
    assert ok >= 48


def test_query_max_rank_clamp():
    eps, m = 0.1, 5120
    xs = np.random.default_rng(3).permutation(400_000) + 1
    s = OnlineSummary(epsilon=eps, m=m, seed=3)
    s.extend(xs)
    assert abs(s.query(s.t) - s.t) <= eps * s.t
    assert abs(s.query(10 * s.t) - s.t) <= eps * s.t


@pytest.mark.parametrize("m", [1, 2, 3])
def test_tiny_m_never_crashes(m):
    for seed in range(10):
        s = OnlineSummary(epsilon=0.5, m=m, seed=seed)
        s.extend(np.arange(1, 50_001))
        assert 1 <= s.query(25_000) <= 50_000
        assert s.snapshot().query(25_000) == s.query(25_000)
