"""Exact rank oracle, reproducible stream generators and error reports.

Ranks use the ascending convention ``rank(y) = |{z : z <= y}|``.  When ``y``
occurs several times, it occupies every sorted position in
``[rank_lt(y) + 1, rank(y)]``; the error of answering rank ``rho`` with ``y``
is the distance from ``rho`` to that interval, which equals
``|rank(y) - rho|`` whenever ``y`` is unique.
"""
from __future__ import annotations

import csv
import io
import json
import math
from bisect import bisect_left, bisect_right, insort
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .sampler import make_generator

STREAM_KINDS = ("sorted", "reversed", "uniform", "zipf", "sawtooth", "file")

#: Sub-stream key for stream generation, disjoint from summary sampler keys.
_STREAM_KEY = 0x5EED


class StreamFormatError(ValueError):
    """A stream file line is not a decimal integer."""


# -- oracle --------------------------------------------------------------------

class ExactOracle:
    """Sorted multiset of every item seen; memory grows with the stream."""

    def __init__(self, items: Iterable[Any] = ()):
        if isinstance(items, np.ndarray):
            self._items: Any = np.sort(items, kind="stable")
        else:
            self._items = sorted(items)

    def __len__(self) -> int:
        return len(self._items)

    def insert(self, x: Any) -> None:
        if isinstance(self._items, np.ndarray):
            self._items = self._items.tolist()
        insort(self._items, x)

    def extend(self, xs: Iterable[Any]) -> None:
        if isinstance(self._items, np.ndarray) and isinstance(xs, np.ndarray):
            self._items = np.sort(np.concatenate([self._items, xs]), kind="stable")
            return
        if isinstance(self._items, np.ndarray):
            self._items = self._items.tolist()
        self._items.extend(xs)
        self._items.sort()

    def rank(self, y: Any) -> int:
        """Number of items ``<= y``."""
        if isinstance(self._items, np.ndarray):
            return int(np.searchsorted(self._items, y, side="right"))
        return bisect_right(self._items, y)

    def rank_lt(self, y: Any) -> int:
        """Number of items ``< y``."""
        if isinstance(self._items, np.ndarray):
            return int(np.searchsorted(self._items, y, side="left"))
        return bisect_left(self._items, y)

    def select(self, rho: int) -> Any:
        """Item at sorted position ``rho`` (1-based)."""
        if len(self._items) == 0:
            raise ValueError("select on an empty oracle")
        if not 1 <= rho <= len(self._items):
            raise ValueError(f"rho must be in [1, {len(self._items)}], got {rho}")
        item = self._items[rho - 1]
        return item.item() if isinstance(item, np.generic) else item

    def rank_error(self, y: Any, rho: int) -> int:
        """Distance from ``rho`` to the sorted positions occupied by ``y``.

        An item never seen sits between positions ``rank(y)`` and
        ``rank(y) + 1``.
        """
        return int(interval_errors([self.rank_lt(y)], [self.rank(y)], [rho])[0])

    def rank_bounds(self, ys: Sequence[Any]) -> Tuple[np.ndarray, np.ndarray]:
        """Vectorised ``(rank_lt, rank)`` for many query items."""
        if isinstance(self._items, np.ndarray):
            arr = np.asarray(ys)
            return (np.searchsorted(self._items, arr, side="left"),
                    np.searchsorted(self._items, arr, side="right"))
        return (np.array([bisect_left(self._items, y) for y in ys], dtype=np.int64),
                np.array([bisect_right(self._items, y) for y in ys], dtype=np.int64))


def interval_errors(lt, le, rhos) -> np.ndarray:
    """Distance from each ``rho`` to the positions ``[lt + 1, le]``.

    Items absent from the stream (``lt == le``) get the gap ``[le, le + 1]``.
    """
    lt = np.asarray(lt, dtype=np.int64)
    le = np.asarray(le, dtype=np.int64)
    rhos = np.asarray(rhos, dtype=np.int64)
    present = lt < le
    lo = np.where(present, lt + 1, le)
    hi = np.where(present, le, le + 1)
    return np.maximum(0, np.maximum(lo - rhos, rhos - hi))


# -- streams ---------------------------------------------------------------------

@dataclass(frozen=True)
class StreamSpec:
    """Reproducible description of an integer test stream.

    ``params`` per kind: ``uniform`` -> ``bits`` (62), ``zipf`` -> ``a`` (1.5),
    ``sawtooth`` -> ``period`` (1000), ``file`` -> ``path``.
    """

    kind: str
    n: Optional[int] = None
    seed: int = 0
    params: Tuple[Tuple[str, Any], ...] = ()

    def __post_init__(self):
        if self.kind not in STREAM_KINDS:
            raise ValueError(f"unknown stream kind {self.kind!r}; expected one of {STREAM_KINDS}")
        if self.n is not None and self.n < 0:
            raise ValueError("n must be non-negative")
        if self.kind != "file" and self.n is None:
            raise ValueError(f"stream kind {self.kind!r} needs n")
        if self.kind == "file" and "path" not in dict(self.params):
            raise ValueError("file stream needs a path")

    @classmethod
    def parse(cls, dist: str, n: Optional[int] = None, seed: int = 0) -> "StreamSpec":
        """Parse ``sorted``, ``zipf``, ``zipf:a=1.2``, ``sawtooth:period=50`` or ``file:PATH``."""
        kind, _, rest = dist.partition(":")
        if kind == "file":
            if not rest:
                raise ValueError("file stream needs a path: file:PATH")
            return cls("file", n, seed, (("path", rest),))
        params = []
        if rest:
            for part in rest.split(","):
                key, eq, value = part.partition("=")
                if not eq:
                    raise ValueError(f"bad stream parameter {part!r}")
                params.append((key, float(value) if key == "a" else int(value)))
        return cls(kind, n, seed, tuple(sorted(params)))

    def param(self, key: str, default: Any) -> Any:
        return dict(self.params).get(key, default)

    def describe(self) -> str:
        if self.kind == "file":
            return f"file:{self.param('path', '')}"
        extra = ",".join(f"{k}={v}" for k, v in self.params)
        return self.kind + (f":{extra}" if extra else "")


def read_stream_file(path: str | Path, n: Optional[int] = None) -> np.ndarray:
    """One decimal integer per line; blank lines are skipped."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(int(text, 10))
            except ValueError:
                raise StreamFormatError(f"{path}:{lineno}: not a decimal integer: {text!r}") from None
            if n is not None and len(values) >= n:
                break
    if n is not None and len(values) < n:
        raise StreamFormatError(f"{path}: has {len(values)} items, fewer than n={n}")
    try:
        return np.array(values, dtype=np.int64)
    except OverflowError:
        raise StreamFormatError(f"{path}: value outside the 64-bit integer range") from None


def write_stream_file(path: str | Path, xs: Iterable[int]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for x in xs:
            fh.write(f"{int(x)}\n")


def generate_stream(spec: StreamSpec) -> np.ndarray:
    """Materialise ``spec`` as an int64 array; same spec, same array."""
    n = spec.n
    if spec.kind == "file":
        return read_stream_file(spec.param("path", ""), n)
    if spec.kind == "sorted":
        return np.arange(1, n + 1, dtype=np.int64)
    if spec.kind == "reversed":
        return np.arange(n, 0, -1, dtype=np.int64)
    if spec.kind == "sawtooth":
        period = int(spec.param("period", 1000))
        if period < 1:
            raise ValueError("sawtooth period must be >= 1")
        return np.arange(n, dtype=np.int64) % period + 1
    gen = make_generator(spec.seed, _STREAM_KEY)
    if spec.kind == "uniform":
        bits = int(spec.param("bits", 62))
        if not 1 <= bits <= 63:
            raise ValueError("uniform bits must be in [1, 63]")
        raw = gen.bit_generator.random_raw(n)
        return (raw >> np.uint64(64 - bits)).astype(np.int64)
    a = float(spec.param("a", 1.5))
    if a <= 1:
        raise ValueError("zipf exponent must be > 1")
    return gen.zipf(a, n).astype(np.int64)


# -- error reports -----------------------------------------------------------------

CSV_COLUMNS = ("trial", "t", "phi", "rho", "answer", "exact_rank", "abs_err", "norm_err")

DEFAULT_PHIS = tuple(round(0.05 * i, 2) for i in range(1, 20))


def phi_to_rank(phi: float, t: int) -> int:
    return max(1, math.floor(phi * t + 0.5))


@dataclass
class QueryRecord:
    trial: int
    t: int
    phi: float
    rho: int
    answer: Any
    exact_rank: int
    abs_err: int
    norm_err: float


@dataclass
class ErrorReport:
    """Per-query errors of one summary configuration against the exact oracle."""

    config: Dict[str, Any]
    tolerance: float
    records: List[QueryRecord] = field(default_factory=list)

    def failures(self) -> List[QueryRecord]:
        return [r for r in self.records if r.abs_err > self.tolerance * r.t]

    def aggregate(self, records: Optional[List[QueryRecord]] = None) -> Dict[str, Any]:
        recs = self.records if records is None else records
        if not recs:
            return {"queries": 0, "max_norm_err": 0.0, "mean_norm_err": 0.0,
                    "failure_fraction": 0.0}
        errs = [r.norm_err for r in recs]
        fails = sum(r.abs_err > self.tolerance * r.t for r in recs)
        return {
            "queries": len(recs),
            "max_norm_err": max(errs),
            "mean_norm_err": sum(errs) / len(errs),
            "failure_fraction": fails / len(recs),
        }

    def by_probe(self) -> Dict[int, Dict[str, Any]]:
        groups: Dict[int, List[QueryRecord]] = {}
        for r in self.records:
            groups.setdefault(r.t, []).append(r)
        return {t: self.aggregate(groups[t]) for t in sorted(groups)}

    def failure_fraction(self) -> float:
        return self.aggregate()["failure_fraction"]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "tolerance": self.tolerance,
            "summary": self.aggregate(),
            "per_probe": [{"t": t, **agg} for t, agg in self.by_probe().items()],
            "records": [asdict(r) for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            w.writerow([r.trial, r.t, repr(r.phi), r.rho, r.answer, r.exact_rank,
                        r.abs_err, repr(r.norm_err)])
        return buf.getvalue()

    def merge(self, other: "ErrorReport") -> None:
        self.records.extend(other.records)


def score_answers(trial: int, t: int, phis: Sequence[float], rhos: Sequence[int],
                  answers: Sequence[Any], oracle: ExactOracle) -> List[QueryRecord]:
    lt, le = oracle.rank_bounds(answers)
    errs = interval_errors(lt, le, np.asarray(rhos))
    out = []
    for phi, rho, ans, rank, err in zip(phis, rhos, answers, le.tolist(), errs.tolist()):
        out.append(QueryRecord(trial, t, float(phi), int(rho),
                               ans.item() if isinstance(ans, np.generic) else ans,
                               int(rank), int(err), err / t))
    return out
