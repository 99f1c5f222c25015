"""Fixed-length streaming summary: Bernoulli sample at rate m/n, then GK.

The sample stream is never stored; accepted items go straight into a GK
summary with error ``epsilon / 8``.  Rank queries are translated into the
sample's rank space by ``rho * m / n`` and truncated to the sample size.
Guarantees only apply once ``t >= n / 64``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, List, Optional, Sequence

import numpy as np

from .gk import GKSummary, _check_epsilon
from .sampler import BernoulliSampler

#: Sample size at which the union-bound argument gives probability >= 2/3.
UNION_BOUND_M_CONSTANT = 300_000


def union_bound_sample_size(epsilon: float) -> int:
    """``ceil(300000 ln(1/eps) / eps^2)``; far too large for desk-scale runs."""
    return math.ceil(UNION_BOUND_M_CONSTANT * math.log(1 / epsilon) / epsilon ** 2)


def default_sample_size(epsilon: float) -> int:
    """``ceil(50 ln(1/eps) / eps^2)``, the calibrated default."""
    return math.ceil(50 / epsilon ** 2 * math.log(1 / epsilon))


def round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


@dataclass(frozen=True)
class FixedNAnswer:
    value: Any
    sample_rank: int
    guaranteed: bool


class FixedNSummary:
    """Summary for a stream whose length ``n`` is known in advance.

    Parameters
    ----------
    epsilon : float
        Target relative rank error; the inner GK summary uses ``epsilon / 8``.
    n : int
        Total stream length.
    m : int, optional
        Expected sample size.  Defaults to :func:`default_sample_size`,
        capped at ``n``.
    seed : int
        Seed of the sampler.
    """

    def __init__(self, epsilon: float, n: int, m: Optional[int] = None, seed: int = 0):
        _check_epsilon(epsilon)
        n = int(n)
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        if m is None:
            m = min(default_sample_size(epsilon), n)
        m = int(m)
        if not 1 <= m <= n:
            raise ValueError(f"m must satisfy 1 <= m <= n, got m={m}, n={n}")
        self.epsilon = float(epsilon)
        self.n = n
        self.m = m
        self.seed = int(seed)
        self.gk = GKSummary(self.epsilon / 8)
        self.sampler = BernoulliSampler(Fraction(m, n), seed=self.seed)
        self.t = 0

    def __repr__(self) -> str:
        return (f"FixedNSummary(epsilon={self.epsilon}, n={self.n}, m={self.m}, "
                f"t={self.t}, sampled={self.gk.count})")

    @property
    def rate(self) -> Fraction:
        return self.sampler.rate

    @property
    def guaranteed(self) -> bool:
        """True once ``t >= n / 64``."""
        return 64 * self.t >= self.n

    def insert(self, x: Any) -> None:
        if self.t >= self.n:
            raise OverflowError(f"stream longer than the declared n={self.n}")
        self.t += 1
        if self.sampler.offer():
            self.gk.insert(x)

    def extend(self, xs: Sequence[Any]) -> None:
        k = len(xs)
        if self.t + k > self.n:
            raise OverflowError(f"stream longer than the declared n={self.n}")
        offsets = self.sampler.accepted_offsets(k)
        self.t += k
        if isinstance(xs, np.ndarray):
            self.gk.extend(xs[offsets].tolist())
        else:
            self.gk.extend(xs[i] for i in offsets.tolist())

    def sample_rank(self, rho: int) -> int:
        """``round(rho * m / n)`` clamped to ``[1, sample size]``."""
        r = round_half_up(Fraction(int(rho) * self.m, self.n))
        return min(max(r, 1), self.gk.count)

    def query_detailed(self, rho: int) -> FixedNAnswer:
        if self.gk.count == 0:
            raise ValueError("no sampled items to answer from")
        s = self.sample_rank(rho)
        return FixedNAnswer(self.gk.query(s), s, self.guaranteed)

    def query(self, rho: int) -> Any:
        return self.query_detailed(rho).value

    def query_many(self, rhos: Iterable[int]) -> List[Any]:
        if self.gk.count == 0:
            raise ValueError("no sampled items to answer from")
        return self.gk.query_many([self.sample_rank(r) for r in rhos])
