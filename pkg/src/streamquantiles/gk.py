"""Greenwald-Khanna quantile summary (deterministic, comparison model).

The summary keeps an ordered list of tuples ``(value, g, delta)``.  With
``rmin_i = g_0 + ... + g_i`` and ``rmax_i = rmin_i + delta_i``, the sorted
position of ``value_i`` among everything inserted lies in ``[rmin_i, rmax_i]``.
A query for rank ``rho`` returns an inserted item whose position is within
``epsilon * count`` of ``rho``.

Only comparisons are performed on items, so any totally ordered type works.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from fractions import Fraction
from typing import Any, Iterable, Iterator, List, NamedTuple, Sequence


class GKTuple(NamedTuple):
    value: Any
    g: int
    delta: int


def _check_epsilon(epsilon: float) -> Fraction:
    try:
        exact = Fraction(epsilon)
    except (TypeError, ValueError):
        raise ValueError(f"epsilon must be a real number, got {epsilon!r}") from None
    if not (0 < exact <= Fraction(1, 2)):
        raise ValueError(f"epsilon must be in (0, 1/2], got {epsilon!r}")
    return exact


class GKSummary:
    """Deterministic epsilon-approximate rank summary.

    Parameters
    ----------
    epsilon : float
        Rank error allowed, relative to the number of inserted items.  Must be
        in ``(0, 1/2]``.

    Notes
    -----
    A band-free compress pass runs every ``ceil(1 / (2 * epsilon))`` inserts.
    It merges a tuple into its right neighbour whenever the merged tuple keeps
    ``g + delta <= floor(2 * epsilon * count)``.  New interior tuples take the
    tight uncertainty ``g_next + delta_next - 1``.  The first tuple (minimum)
    and the last tuple (maximum, ``delta == 0``) are never merged away.
    """

    __slots__ = ("epsilon", "_eps_num", "_eps_den", "_values", "_g", "_delta",
                 "_count", "_period", "_since_compress")

    def __init__(self, epsilon: float):
        exact = _check_epsilon(epsilon)
        self.epsilon = float(epsilon)
        self._eps_num = exact.numerator
        self._eps_den = exact.denominator
        self._values: List[Any] = []
        self._g: List[int] = []
        self._delta: List[int] = []
        self._count = 0
        self._period = math.ceil(exact.denominator / (2 * exact.numerator))
        self._since_compress = 0

    # -- sizes -----------------------------------------------------------------
    @property
    def count(self) -> int:
        """Number of items inserted so far."""
        return self._count

    @property
    def tuple_count(self) -> int:
        return len(self._values)

    def __len__(self) -> int:
        return self._count

    def __repr__(self) -> str:
        return (f"GKSummary(epsilon={self.epsilon!r}, count={self._count}, "
                f"tuples={len(self._values)})")

    @property
    def tuples(self) -> List[GKTuple]:
        return [GKTuple(v, g, d) for v, g, d in zip(self._values, self._g, self._delta)]

    def __iter__(self) -> Iterator[GKTuple]:
        return iter(self.tuples)

    def capacity(self, count: int | None = None) -> int:
        """Largest ``g + delta`` a merged tuple may carry: ``floor(2 eps n)``."""
        n = self._count if count is None else count
        return (2 * self._eps_num * n) // self._eps_den

    def error_bound(self) -> float:
        """Deterministic rank error bound ``epsilon * count``."""
        return self.epsilon * self._count

    # -- updates ---------------------------------------------------------------
    def insert(self, x: Any) -> None:
        values = self._values
        i = bisect_right(values, x)
        if i == 0 or i == len(values):
            d = 0
        else:
            d = self._g[i] + self._delta[i] - 1
        values.insert(i, x)
        self._g.insert(i, 1)
        self._delta.insert(i, d)
        self._count += 1
        self._since_compress += 1
        if self._since_compress >= self._period:
            self.compress()

    def extend(self, xs: Iterable[Any]) -> None:
        insert = self.insert
        for x in xs:
            insert(x)

    def compress(self) -> None:
        self._since_compress = 0
        k = len(self._values)
        if k < 3:
            return
        cap = self.capacity()
        values, g, delta = self._values, self._g, self._delta
        out_v = []
        out_g = []
        out_d = []
        head_v, head_g, head_d = values[-1], g[-1], delta[-1]
        for i in range(k - 2, 0, -1):
            gi = g[i]
            if gi + head_g + head_d <= cap:
                head_g += gi
            else:
                out_v.append(head_v)
                out_g.append(head_g)
                out_d.append(head_d)
                head_v, head_g, head_d = values[i], gi, delta[i]
        out_v.append(head_v)
        out_g.append(head_g)
        out_d.append(head_d)
        out_v.append(values[0])
        out_g.append(g[0])
        out_d.append(delta[0])
        out_v.reverse()
        out_g.reverse()
        out_d.reverse()
        self._values, self._g, self._delta = out_v, out_g, out_d

    # -- queries ---------------------------------------------------------------
    def _slack(self) -> int:
        # floor(epsilon * count); rmax is an integer so this is exact.
        return (self._eps_num * self._count) // self._eps_den

    def query(self, rho: int) -> Any:
        """Return an inserted item whose rank is within ``epsilon * count`` of ``rho``.

        ``rho`` is clamped to ``[1, count]``.
        """
        if self._count == 0:
            raise ValueError("query on an empty GKSummary")
        rho = min(max(int(rho), 1), self._count)
        bound = rho + self._slack()
        values, g, delta = self._values, self._g, self._delta
        rmin = 0
        for i in range(len(values)):
            rmin += g[i]
            if rmin + delta[i] > bound:
                return values[i - 1] if i else values[0]
        return values[-1]

    def query_many(self, rhos: Sequence[int]) -> List[Any]:
        """Answer several rank queries in one pass over the tuples.

        Gives exactly the answers of repeated :meth:`query` calls.
        """
        if self._count == 0:
            raise ValueError("query on an empty GKSummary")
        n = self._count
        slack = self._slack()
        clamped = [min(max(int(r), 1), n) for r in rhos]
        order = sorted(range(len(clamped)), key=clamped.__getitem__)
        out: List[Any] = [None] * len(clamped)
        values, g, delta = self._values, self._g, self._delta
        k = len(values)
        i = 0
        rmin = g[0]
        for j in order:
            bound = clamped[j] + slack
            while i < k and rmin + delta[i] <= bound:
                i += 1
                if i < k:
                    rmin += g[i]
            out[j] = values[i - 1] if i else values[0]
        return out

    def quantile(self, phi: float) -> Any:
        if not 0 < phi <= 1:
            raise ValueError(f"phi must be in (0, 1], got {phi!r}")
        return self.query(max(1, round(phi * self._count)))

    # -- copying ---------------------------------------------------------------
    def copy(self) -> "GKSummary":
        other = GKSummary.__new__(GKSummary)
        other.epsilon = self.epsilon
        other._eps_num = self._eps_num
        other._eps_den = self._eps_den
        other._values = list(self._values)
        other._g = list(self._g)
        other._delta = list(self._delta)
        other._count = self._count
        other._period = self._period
        other._since_compress = self._since_compress
        return other

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GKSummary):
            return NotImplemented
        return (self.epsilon == other.epsilon and self._count == other._count
                and self._values == other._values and self._g == other._g
                and self._delta == other._delta)

    __hash__ = None  # mutable
