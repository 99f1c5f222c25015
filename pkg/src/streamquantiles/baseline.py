"""Uniform reservoir sample (Algorithm R), used only as a comparison baseline."""
from __future__ import annotations

from typing import Any, List, Sequence

import numpy as np

from .sampler import make_generator

_RESERVOIR_KEY = 0xBA5E


class ReservoirSample:
    """Size-``k`` uniform sample of the stream; queries sort the reservoir."""

    def __init__(self, k: int, seed: int = 0):
        if k < 1:
            raise ValueError("reservoir size must be >= 1")
        self.k = int(k)
        self.seed = int(seed)
        self.t = 0
        self.items: List[Any] = []
        self._gen = make_generator(self.seed, _RESERVOIR_KEY)

    def __repr__(self) -> str:
        return f"ReservoirSample(k={self.k}, t={self.t})"

    def extend(self, xs: Sequence[Any]) -> None:
        n = len(xs)
        fill = min(max(self.k - self.t, 0), n)
        if fill:
            head = xs[:fill]
            self.items.extend(head.tolist() if isinstance(head, np.ndarray) else head)
            self.t += fill
        if fill == n:
            return
        # item with 1-based index i replaces slot j if j = U[0, i) < k
        idx = np.arange(self.t + 1, self.t + n - fill + 1, dtype=np.int64)
        slots = self._gen.integers(0, idx)
        hits = np.flatnonzero(slots < self.k)
        rest = xs[fill:]
        for h, j in zip(hits.tolist(), slots[hits].tolist()):
            self.items[j] = rest[h].item() if isinstance(rest, np.ndarray) else rest[h]
        self.t += n - fill

    def insert(self, x: Any) -> None:
        self.extend([x])

    def query(self, rho: int) -> Any:
        return self.query_many([rho])[0]

    def query_many(self, rhos: Sequence[int]) -> List[Any]:
        if not self.items:
            raise ValueError("query on an empty reservoir")
        ordered = sorted(self.items)
        size = len(ordered)
        out = []
        for rho in rhos:
            i = (2 * int(rho) * size + self.t) // (2 * self.t)
            out.append(ordered[min(max(i, 1), size) - 1])
        return out
