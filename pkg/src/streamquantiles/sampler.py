"""Seeded Bernoulli sampling with exact rational rates.

Each offer consumes one raw 64-bit draw ``u`` from a PCG64 generator and is
accepted iff ``u < floor(rate * 2**64)``.  The threshold is computed with
integers, so dyadic rates such as ``1 / (2**r * 32)`` are exact and tiny rates
carry no floating-point bias.  Rate 1 accepts without drawing.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Sequence, Tuple, Union

import numpy as np

RateLike = Union[int, Fraction, Tuple[int, int], str]

_TWO64 = 1 << 64


def as_rate(rate: RateLike) -> Fraction:
    """Convert ``rate`` to an exact fraction in ``(0, 1]``.

    Floats are rejected: pass ``Fraction(m, n)`` or ``(m, n)`` instead.
    """
    if isinstance(rate, tuple):
        rate = Fraction(*rate)
    elif isinstance(rate, (Rational, str)) and not isinstance(rate, bool):
        rate = Fraction(rate)
    else:
        raise TypeError(f"rate must be an exact rational, got {type(rate).__name__}")
    if not 0 < rate <= 1:
        raise ValueError(f"rate must be in (0, 1], got {rate}")
    return rate


def make_generator(seed: int, *key: int) -> np.random.Generator:
    """PCG64 generator for ``seed``; ``key`` selects an independent sub-stream."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


class BernoulliSampler:
    """Independent per-offer acceptance with probability ``rate``.

    The accept/reject sequence is a pure function of ``(seed, key, rate)``.
    :meth:`offer` and :meth:`offer_many` consume the same draws, so any mix of
    the two produces the same decisions.
    """

    __slots__ = ("rate", "seed", "key", "_threshold", "_bitgen", "offered", "accepted")

    def __init__(self, rate: RateLike, seed: int = 0, key: Sequence[int] = ()):
        self.rate = as_rate(rate)
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        self._threshold = (self.rate.numerator * _TWO64) // self.rate.denominator
        self._bitgen = make_generator(self.seed, *self.key).bit_generator
        self.offered = 0
        self.accepted = 0

    def __repr__(self) -> str:
        return (f"BernoulliSampler(rate={self.rate}, seed={self.seed}, key={self.key}, "
                f"offered={self.offered}, accepted={self.accepted})")

    @property
    def certain(self) -> bool:
        return self._threshold >= _TWO64

    def offer(self) -> bool:
        self.offered += 1
        if self._threshold >= _TWO64:
            self.accepted += 1
            return True
        if int(self._bitgen.random_raw()) < self._threshold:
            self.accepted += 1
            return True
        return False

    def offer_many(self, k: int) -> np.ndarray:
        """Decide ``k`` consecutive offers; returns a boolean mask."""
        if k <= 0:
            return np.zeros(0, dtype=bool)
        self.offered += k
        if self._threshold >= _TWO64:
            self.accepted += k
            return np.ones(k, dtype=bool)
        mask = self._bitgen.random_raw(k) < np.uint64(self._threshold)
        self.accepted += int(np.count_nonzero(mask))
        return mask

    def accepted_offsets(self, k: int) -> np.ndarray:
        """Offsets in ``range(k)`` accepted by the next ``k`` offers."""
        if self._threshold >= _TWO64:
            self.offered += k
            self.accepted += k
            return np.arange(k)
        return np.flatnonzero(self.offer_many(k))
