"""Fully online quantile summary built from rows of sample-then-GK pipelines.

Row ``r`` summarises the first ``2**r * 32 * m`` stream items.  It samples its
input at rate ``1 / (2**r * 32)`` (row 0 does not sample) and feeds the
samples into its own GK summary with error ``epsilon / 8``.  Row ``r >= 1``
starts once ``2**(r-1) * m`` items have gone by; the prefix it missed is
replaced by ``ceil(8 / epsilon)`` answers read off row ``r - 1``, each repeated
so the replacement has exactly ``2**(r-1) * m`` items.  Replacement items are
fed one per timestep, interleaved with the live stream, and every row ``r >= 1``
stops accepting samples after ``2 * m`` GK insertions.

Schedule, for timestep ``t`` (first item is ``t = 1``)::

    row 0:      live [1, 32m]                      active [1, 32m]
    row r >= 1: live [2**(r-1) m + 1, 2**r 32m]    active [2**r 16m + 1, 2**r 32m]
                replacement fed during (2**(r-1) m, 2**r m]

At most six rows are live after any timestep.  State changes scheduled for the
end of timestep ``t`` (allocation, activation, retirement) are applied just
before item ``t + 1`` is ingested, so queries made after inserting item ``t``
always see the rows whose windows contain ``t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import islice
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .fixed_n import round_half_up
from .gk import GKSummary, _check_epsilon
from .sampler import BernoulliSampler

#: Constant of the sample size that makes the error guarantee hold w.p. 1 - e^(-1/eps).
UNION_BOUND_M_CONSTANT = 400_000

REPLACEMENT_MODES = ("scaled", "literal")

_MAX_CHUNK = 1 << 18
_MAX_T = 1 << 62


def union_bound_row_size(epsilon: float) -> int:
    """``ceil(400000 ln(1/eps) / eps^2)``."""
    return math.ceil(UNION_BOUND_M_CONSTANT * math.log(1 / epsilon) / epsilon ** 2)


@dataclass(frozen=True)
class OnlineConfig:
    """Parameters of an :class:`OnlineSummary`.

    ``row0_sampled`` switches row 0 to the uniform ``1/32`` sampling rate and
    ``2m`` cap of the one-rate-for-all-rows variant (experimental, no guarantees).
    ``replacement_ranks`` selects how replacement query ranks are computed;
    see :func:`replacement_ranks`.
    """

    epsilon: float
    m: int
    seed: int = 0
    row0_sampled: bool = False
    replacement_ranks: str = "scaled"

    def __post_init__(self):
        _check_epsilon(self.epsilon)
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        if self.replacement_ranks not in REPLACEMENT_MODES:
            raise ValueError(f"replacement_ranks must be one of {REPLACEMENT_MODES}")

    @property
    def num_queries(self) -> int:
        """Size of each replacement query set, ``ceil(8 / epsilon)``."""
        return math.ceil(8 / Fraction(self.epsilon))

    @property
    def recommended(self) -> bool:
        """``m >= 64`` and ``m * epsilon >= 512`` (every replacement rank >= 1)."""
        return self.m >= 64 and self.m * Fraction(self.epsilon) >= 512


# -- schedule ------------------------------------------------------------------

def row_divisor(r: int, row0_sampled: bool = False) -> int:
    """Inverse sampling rate of row ``r``."""
    if r == 0 and not row0_sampled:
        return 1
    return 32 << r


def allocation_time(r: int, m: int) -> int:
    """Timestep after which row ``r`` is allocated (0 for row 0)."""
    return 0 if r == 0 else m << (r - 1)


def activation_time(r: int, m: int) -> int:
    """First timestep in which row ``r`` answers queries."""
    return 1 if r == 0 else (16 * m << r) + 1


def retirement_time(r: int, m: int) -> int:
    """Last timestep in which row ``r`` is live."""
    return 32 * m << r


def live_rows_at(t: int, m: int) -> List[int]:
    """Rows whose live window contains timestep ``t``."""
    out = []
    r = 0
    while allocation_time(r, m) < t:
        if t <= retirement_time(r, m):
            out.append(r)
        r += 1
    return out


def active_row_at(t: int, m: int) -> int:
    if t <= 32 * m:
        return 0
    # smallest r >= 1 with t <= 2**r * 32m
    r = 1
    while t > retirement_time(r, m):
        r += 1
    return r


# -- replacement ----------------------------------------------------------------

class ReplacementQueue:
    """Implicit replacement prefix: each stored value repeated ``dup`` times.

    Item ``i`` (1-based) is ``q_values[(i - 1) // dup]``; the last value also
    absorbs the ``total - dup * len(q_values)`` leftover positions.
    """

    __slots__ = ("q_values", "total", "dup", "consumed")

    def __init__(self, q_values: Sequence[Any], total: int):
        if not q_values:
            raise ValueError("replacement needs at least one value")
        self.q_values = list(q_values)
        self.total = int(total)
        self.dup = max(1, self.total // len(self.q_values))
        self.consumed = 0

    def __len__(self) -> int:
        return self.total

    def __repr__(self) -> str:
        return (f"ReplacementQueue(values={len(self.q_values)}, dup={self.dup}, "
                f"total={self.total}, consumed={self.consumed})")

    @property
    def remaining(self) -> int:
        return self.total - self.consumed

    def item(self, i: int) -> Any:
        if not 1 <= i <= self.total:
            raise IndexError(i)
        return self.q_values[min((i - 1) // self.dup, len(self.q_values) - 1)]

    def next_item(self) -> Any:
        self.consumed += 1
        return self.item(self.consumed)

    def expand(self) -> List[Any]:
        return [self.item(i) for i in range(1, self.total + 1)]


def replacement_ranks(epsilon: float, m: int, r: int, mode: str = "scaled",
                      prev_divisor: Optional[int] = None) -> List[int]:
    """Ranks at which row ``r - 1`` is queried to build row ``r``'s replacement.

    ``"literal"`` uses ``max(1, round(q * eps * m / 512))``.  ``"scaled"`` asks
    for the ``q / Q`` quantile (``Q = ceil(8/eps)``) of the ``2**(r-1) m``
    items row ``r - 1`` has seen, translated by that row's sampling divisor:
    ``max(1, round(q * 2**(r-1) m / (Q * prev_divisor)))``.  With the
    ``2**(r-1) * 32`` divisor and ``8/eps`` integral this is
    ``q * eps * m / 256``.
    """
    eps = Fraction(epsilon)
    nq = math.ceil(8 / eps)
    if mode == "literal":
        return [max(1, round_half_up(q * eps * m / 512)) for q in range(1, nq + 1)]
    if mode != "scaled":
        raise ValueError(f"unknown replacement mode {mode!r}")
    if prev_divisor is None:
        prev_divisor = row_divisor(r - 1)
    t_r = m << (r - 1)
    return [max(1, round_half_up(Fraction(q * t_r, nq * prev_divisor)))
            for q in range(1, nq + 1)]


def generate_replacement(gk_prev: GKSummary, epsilon: float, m: int, r: int,
                         mode: str = "scaled",
                         prev_divisor: Optional[int] = None) -> ReplacementQueue:
    """Query ``gk_prev`` and wrap the answers as row ``r``'s replacement prefix."""
    if r < 1:
        raise ValueError("row 0 has no replacement prefix")
    if gk_prev.count == 0:
        raise ValueError(f"row {r - 1} summary is empty; cannot build replacement")
    ranks = replacement_ranks(epsilon, m, r, mode, prev_divisor)
    return ReplacementQueue(gk_prev.query_many(ranks), m << (r - 1))


def _scaled_rank(rho: int, divisor: int, count: int) -> int:
    """``round(rho / divisor)`` clamped to ``[1, count]``."""
    return min(max((2 * int(rho) + divisor) // (2 * divisor), 1), count)


# -- rows -------------------------------------------------------------------------

class Row:
    """One sample-then-GK pipeline of the online summary."""

    __slots__ = ("r", "gk", "divisor", "cap", "sampler", "replacement",
                 "replacement_sampler", "allocated_at", "replacement_end",
                 "active_from", "retire_at", "samples")

    def __init__(self, r: int, config: OnlineConfig,
                 replacement: Optional[ReplacementQueue] = None, record: bool = False):
        m = config.m
        self.r = r
        self.gk = GKSummary(config.epsilon / 8)
        self.divisor = row_divisor(r, config.row0_sampled)
        self.cap = None if self.divisor == 1 else 2 * m
        rate = Fraction(1, self.divisor)
        self.sampler = BernoulliSampler(rate, config.seed, key=(r, 0))
        self.replacement = replacement
        self.replacement_sampler = (BernoulliSampler(rate, config.seed, key=(r, 1))
                                    if replacement is not None else None)
        self.allocated_at = allocation_time(r, m)
        self.replacement_end = 0 if r == 0 else m << r
        self.active_from = activation_time(r, m)
        self.retire_at = retirement_time(r, m)
        self.samples: Optional[List[Any]] = [] if record else None

    def __repr__(self) -> str:
        return (f"Row(r={self.r}, insertions={self.gk.count}, "
                f"tuples={self.gk.tuple_count}, divisor={self.divisor})")

    @property
    def gk_insertions(self) -> int:
        return self.gk.count

    @property
    def full(self) -> bool:
        return self.cap is not None and self.gk.count >= self.cap

    def gk_rank(self, rho: int) -> int:
        """``round(rho / divisor)`` clamped to ``[1, insertions]``."""
        return _scaled_rank(rho, self.divisor, self.gk.count)

    def feeds_replacement(self, t: int) -> bool:
        return self.replacement is not None and self.allocated_at < t <= self.replacement_end


@dataclass
class OnlineStats:
    t: int
    live_rows: List[int]
    active: int
    gk_insertions: Dict[int, int]
    tuple_counts: Dict[int, int]
    total_tuples: int
    peak_tuples: int

    def as_dict(self) -> dict:
        return {
            "t": self.t,
            "live_rows": list(self.live_rows),
            "active": self.active,
            "gk_insertions": {str(k): v for k, v in self.gk_insertions.items()},
            "tuple_counts": {str(k): v for k, v in self.tuple_counts.items()},
            "total_tuples": self.total_tuples,
            "peak_tuples": self.peak_tuples,
        }


@dataclass(frozen=True)
class OnlineSnapshot:
    """Frozen copy of the answering row, safe to query from another thread."""

    t: int
    row: int
    divisor: int
    gk: GKSummary = field(repr=False)

    def query(self, rho: int) -> Any:
        return self.gk.query(_scaled_rank(rho, self.divisor, self.gk.count))


def _take(chunk, offsets: List[int]) -> list:
    if isinstance(chunk, np.ndarray):
        return chunk[offsets].tolist()
    return [chunk[i] for i in offsets]


class OnlineSummary:
    """Randomized online epsilon-approximate quantile summary.

    Parameters
    ----------
    config : OnlineConfig, optional
        Full configuration; alternatively pass ``epsilon``, ``m`` and ``seed``.
    record : bool
        Keep every row's full sample stream and retired rows for inspection.
        Memory grows with the stream; meant for tests only.

    Examples
    --------
    >>> s = OnlineSummary(epsilon=0.1, m=5120, seed=1)
    >>> s.extend(range(1, 1001))
    >>> s.query(500)
    500
    """

    def __init__(self, config: Optional[OnlineConfig] = None, *, epsilon: Optional[float] = None,
                 m: Optional[int] = None, seed: int = 0, record: bool = False, **options):
        if config is None:
            if epsilon is None or m is None:
                raise TypeError("pass an OnlineConfig or both epsilon and m")
            config = OnlineConfig(epsilon, m, seed, **options)
        elif epsilon is not None or m is not None or options:
            raise TypeError("pass either an OnlineConfig or keyword parameters, not both")
        self.config = config
        self.record = record
        self.t = 0
        self.active = 0
        self._rows: Dict[int, Row] = {0: Row(0, config, record=record)}
        self._next_row = 1
        self.retired: List[Row] = []
        #: final GK insertion count of every retired row
        self.retired_insertions: Dict[int, int] = {}
        self._tuples = 0
        self.peak_tuples = 0

    def __repr__(self) -> str:
        return (f"OnlineSummary(epsilon={self.config.epsilon}, m={self.config.m}, t={self.t}, "
                f"rows={list(self._rows)}, active={self.active})")

    def __len__(self) -> int:
        return self.t

    @property
    def rows(self) -> List[Row]:
        return list(self._rows.values())

    def row(self, r: int) -> Row:
        return self._rows[r]

    @property
    def total_tuples(self) -> int:
        return self._tuples

    def reset_peak(self) -> None:
        self.peak_tuples = self._tuples

    # -- schedule ----------------------------------------------------------------
    def _apply_schedule(self) -> None:
        """Apply the state changes due at the end of timestep ``self.t``."""
        t = self.t
        m = self.config.m
        oldest = next(iter(self._rows.values()))
        if oldest.retire_at == t:
            del self._rows[oldest.r]
            self.retired_insertions[oldest.r] = oldest.gk.count
            self._tuples -= oldest.gk.tuple_count
            if self.record:
                self.retired.append(oldest)
        r = self._next_row
        if allocation_time(r, m) == t:
            # row r-1 may hold no samples when m is tiny; older live rows
            # summarise the same prefix at a finer rate
            prev = next((self._rows[q] for q in range(r - 1, -1, -1)
                         if q in self._rows and self._rows[q].gk.count), None)
            if prev is not None:
                queue = generate_replacement(prev.gk, self.config.epsilon, m, r,
                                             self.config.replacement_ranks, prev.divisor)
            else:
                # every live row is empty: reuse the previous row's own prefix values
                queue = ReplacementQueue(self._rows[r - 1].replacement.q_values, m << (r - 1))
            self._rows[r] = Row(r, self.config, queue, record=self.record)
            self._next_row = r + 1
        if activation_time(self.active + 1, m) == t + 1:
            self.active += 1

    def _next_boundary(self) -> int:
        """Earliest timestep ``b > t`` at whose end the schedule changes."""
        m = self.config.m
        b = min(next(iter(self._rows.values())).retire_at,
                allocation_time(self._next_row, m),
                activation_time(self.active + 1, m) - 1)
        for row in self._rows.values():
            if self.t < row.replacement_end < b:
                b = row.replacement_end
        return b

    # -- ingest ------------------------------------------------------------------
    def _accept(self, row: Row, x: Any) -> int:
        """Feed one sample to ``row``; returns the change in its tuple count."""
        if row.samples is not None:
            row.samples.append(x)
        if row.cap is not None and row.gk.count >= row.cap:
            return 0
        gk = row.gk
        before = gk.tuple_count
        gk.insert(x)
        change = gk.tuple_count - before
        self._tuples += change
        return change

    def insert(self, x: Any) -> None:
        if self.t >= _MAX_T:
            raise OverflowError("stream longer than 2**62 items")
        self._apply_schedule()
        t = self.t = self.t + 1
        accept = self._accept
        for row in self._rows.values():
            if row.sampler.offer():
                accept(row, x)
            if row.feeds_replacement(t):
                item = row.replacement.next_item()
                if row.replacement_sampler.offer():
                    accept(row, item)
        if self._tuples > self.peak_tuples:
            self.peak_tuples = self._tuples

    def extend(self, xs: Iterable[Any]) -> None:
        """Insert many items; identical in effect to repeated :meth:`insert`.

        Sampling decisions are drawn in bulk, so only accepted items cost
        Python-level work.  NumPy arrays and sequences are sliced directly;
        other iterables are consumed in chunks.
        """
        if not isinstance(xs, (np.ndarray, list, tuple, range)):
            it = iter(xs)
            while True:
                block = list(islice(it, _MAX_CHUNK))
                if not block:
                    return
                self.extend(block)
        n = len(xs)
        if self.t + n > _MAX_T:
            raise OverflowError("stream longer than 2**62 items")
        pos = 0
        accept = self._accept
        while pos < n:
            self._apply_schedule()
            t0 = self.t
            k = min(n - pos, self._next_boundary() - t0, _MAX_CHUNK)
            chunk = xs[pos:pos + k]
            base_tuples = self._tuples
            # (offset, tuple-count change) of every accepted sample, for the peak
            ev_offs: List[int] = []
            ev_changes: List[int] = []
            for row in self._rows.values():
                x_offs = row.sampler.accepted_offsets(k)
                if not row.feeds_replacement(t0 + 1):
                    if row.samples is None and row.full:
                        continue
                    x_offs = x_offs.tolist()
                    ev_offs.extend(x_offs)
                    ev_changes.extend([accept(row, x) for x in _take(chunk, x_offs)])
                    continue
                queue = row.replacement
                base = queue.consumed
                r_offs = row.replacement_sampler.accepted_offsets(k).tolist()
                queue.consumed = base + k
                if row.samples is None and row.full:
                    continue
                x_offs = x_offs.tolist()
                x_items = _take(chunk, x_offs)
                # same timestep: live item first, then the replacement item
                i = j = 0
                while i < len(x_offs) or j < len(r_offs):
                    if j == len(r_offs) or (i < len(x_offs) and x_offs[i] <= r_offs[j]):
                        ev_offs.append(x_offs[i])
                        ev_changes.append(accept(row, x_items[i]))
                        i += 1
                    else:
                        ev_offs.append(r_offs[j])
                        ev_changes.append(accept(row, queue.item(base + r_offs[j] + 1)))
                        j += 1
            if ev_offs:
                self._update_peak(base_tuples, ev_offs, ev_changes)
            self.t = t0 + k
            pos += k

    def _update_peak(self, base: int, offs: List[int], changes: List[int]) -> None:
        offs_a = np.asarray(offs)
        order = np.argsort(offs_a, kind="stable")
        offs_a = offs_a[order]
        totals = base + np.cumsum(np.asarray(changes)[order])
        # totals as they stand at the end of each timestep that saw a change
        last = np.flatnonzero(np.append(offs_a[1:] != offs_a[:-1], True))
        peak = int(totals[last].max())
        if peak > self.peak_tuples:
            self.peak_tuples = peak

    def query(self, rho: int) -> Any:
        """Item whose rank in the stream so far is probably within ``epsilon * t`` of ``rho``."""
        r, divisor, gk = self._answer_source()
        return gk.query(_scaled_rank(rho, divisor, gk.count))

    def query_many(self, rhos: Iterable[int]) -> List[Any]:
        r, divisor, gk = self._answer_source()
        return gk.query_many([_scaled_rank(rho, divisor, gk.count) for rho in rhos])

    def query_phi(self, phi: float) -> Any:
        if not 0 < phi <= 1:
            raise ValueError(f"phi must be in (0, 1], got {phi!r}")
        return self.query(self.phi_rank(phi))

    def phi_rank(self, phi: float) -> int:
        return max(1, math.floor(phi * self.t + 0.5))

    def _answer_source(self):
        """``(row index, rank divisor, GK summary)`` used to answer queries."""
        if self.t == 0:
            raise ValueError("query before any item was inserted")
        row = self._rows[self.active]
        if row.gk.count:
            return row.r, row.divisor, row.gk
        # only reachable with tiny m: fall back to the fullest live row, then
        # to the active row's replacement values
        best = max(self._rows.values(), key=lambda rw: rw.gk.count)
        if best.gk.count:
            return best.r, best.divisor, best.gk
        if row.replacement is None:
            raise ValueError("no live row holds any samples yet")
        gk = GKSummary(self.config.epsilon / 8)
        gk.extend(row.replacement.q_values)
        return row.r, max(1, round_half_up(Fraction(self.t, gk.count))), gk

    def snapshot(self) -> OnlineSnapshot:
        r, divisor, gk = self._answer_source()
        return OnlineSnapshot(self.t, r, divisor, gk.copy())

    def stats(self) -> OnlineStats:
        rows = self._rows.values()
        return OnlineStats(
            t=self.t,
            live_rows=[rw.r for rw in rows],
            active=self.active,
            gk_insertions={rw.r: rw.gk.count for rw in rows},
            tuple_counts={rw.r: rw.gk.tuple_count for rw in rows},
            total_tuples=self._tuples,
            peak_tuples=self.peak_tuples,
        )

