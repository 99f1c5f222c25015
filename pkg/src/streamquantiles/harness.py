"""Evaluation harness: run, eval, bench and goodness, as plain functions.

The command line in :mod:`streamquantiles.cli` only parses flags and
serialises what these functions return.
"""
from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .baseline import ReservoirSample
from .fixed_n import FixedNSummary, default_sample_size
from .gk import GKSummary
from .online import OnlineConfig, OnlineSummary, retirement_time
from .oracle import (DEFAULT_PHIS, ErrorReport, QueryRecord, StreamSpec, generate_stream,
                     interval_errors, phi_to_rank)
from .sampler import BernoulliSampler

ALGORITHMS = ("gk", "fixedn", "online", "reservoir")

DEFAULT_SCALE_CAP = 4_000_000


class ScaleError(RuntimeError):
    """Instrumented run requested above the ``QS_SCALE_CAP`` item limit."""


def scale_cap() -> int:
    raw = os.environ.get("QS_SCALE_CAP")
    if raw is None:
        return DEFAULT_SCALE_CAP
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"QS_SCALE_CAP must be an integer, got {raw!r}") from None


def default_m(algo: str, epsilon: float) -> int:
    """Row size / sample size used when none is given."""
    rule = default_sample_size(epsilon)
    if algo == "online":
        return max(rule, math.ceil(512 / epsilon), 64)
    return rule


def tolerance_for(algo: str, epsilon: float) -> float:
    """Relative rank error each summary is expected to meet."""
    return epsilon / 2 if algo == "fixedn" else epsilon


def make_summary(algo: str, epsilon: float, n: int, m: Optional[int], seed: int):
    if algo == "gk":
        return GKSummary(epsilon)
    if algo == "fixedn":
        return FixedNSummary(epsilon, n, m, seed)
    if algo == "online":
        return OnlineSummary(epsilon=epsilon, m=m or default_m("online", epsilon), seed=seed)
    if algo == "reservoir":
        if m is None:
            raise ValueError("reservoir baseline needs a size")
        return ReservoirSample(m, seed)
    raise ValueError(f"unknown algorithm {algo!r}; expected one of {ALGORITHMS}")


def answer(summary, rhos: Sequence[int]) -> List[Any]:
    return summary.query_many(rhos)


def default_probes(algo: str, n: int, m: Optional[int] = None) -> List[int]:
    """Powers of two up to ``n`` plus ``n``; online adds row hand-off edges."""
    if algo == "fixedn":
        return sorted({max(1, math.ceil(n / 64)), max(1, n // 4), n})
    probes = {1 << k for k in range(n.bit_length()) if 1 << k <= n}
    probes.add(n)
    if algo == "online" and m:
        if m // 2 >= 1:
            probes.add(m // 2)
        r = 1
        while (16 * m << r) - 1 <= n:
            edge = 16 * m << r
            probes.update(t for t in (edge - 1, edge, edge + 1) if 1 <= t <= n)
            r += 1
    return sorted(probes)


def prefix_rank_bounds(prefix: np.ndarray, ys: Sequence[Any]) -> Tuple[np.ndarray, np.ndarray]:
    """Exact ``(|{x < y}|, |{x <= y}|)`` of each ``y`` over ``prefix``, without sorting it."""
    ys = np.asarray(ys)
    order = np.argsort(ys, kind="stable")
    ys_sorted = ys[order]
    k = len(ys_sorted)
    # x <= ys[j]  iff  #(ys < x) <= j ;  x < ys[j]  iff  #(ys <= x) <= j
    below = np.searchsorted(ys_sorted, prefix, side="left")
    upto = np.searchsorted(ys_sorted, prefix, side="right")
    le = np.cumsum(np.bincount(below, minlength=k + 1))[:k]
    lt = np.cumsum(np.bincount(upto, minlength=k + 1))[:k]
    out_lt = np.empty(k, dtype=np.int64)
    out_le = np.empty(k, dtype=np.int64)
    out_lt[order] = lt
    out_le[order] = le
    return out_lt, out_le


# -- eval -----------------------------------------------------------------------------

def trial_stream(spec: StreamSpec, trial: int) -> StreamSpec:
    """Random stream kinds get a fresh seed per trial; the others repeat."""
    if spec.kind in ("uniform", "zipf"):
        return replace(spec, seed=spec.seed + trial)
    return spec


def evaluate_once(algo: str, stream: np.ndarray, epsilon: float, m: Optional[int], seed: int,
                  probes: Sequence[int], phis: Sequence[float], trial: int = 0) -> List[QueryRecord]:
    n = len(stream)
    summary = make_summary(algo, epsilon, n, m, seed)
    records: List[QueryRecord] = []
    t = 0
    for probe in sorted(set(probes)):
        if not 1 <= probe <= n:
            raise ValueError(f"probe time {probe} outside [1, {n}]")
        summary.extend(stream[t:probe])
        t = probe
        rhos = [phi_to_rank(phi, t) for phi in phis]
        answers = answer(summary, rhos)
        lt, le = prefix_rank_bounds(stream[:t], answers)
        errs = interval_errors(lt, le, rhos)
        for phi, rho, ans, rank, err in zip(phis, rhos, answers, le.tolist(), errs.tolist()):
            records.append(QueryRecord(trial, t, float(phi), rho, int(ans), int(rank),
                                       int(err), err / t))
    return records


def evaluate(algo: str, spec: StreamSpec, epsilon: float, m: Optional[int] = None,
             trials: int = 1, seed: int = 0, probes: Optional[Sequence[int]] = None,
             phis: Sequence[float] = DEFAULT_PHIS,
             tolerance: Optional[float] = None) -> ErrorReport:
    """Run ``trials`` seeded repetitions and score every query exactly.

    Trial ``i`` uses summary seed ``seed + i``; random streams also shift
    their seed by ``i``.
    """
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}")
    if m is None and algo in ("fixedn", "online"):
        m = default_m(algo, epsilon)
    tol = tolerance_for(algo, epsilon) if tolerance is None else tolerance
    cached: Dict[StreamSpec, np.ndarray] = {}
    report = None
    for trial in range(trials):
        tspec = trial_stream(spec, trial)
        if tspec not in cached:
            cached.clear()
            cached[tspec] = generate_stream(tspec)
        stream = cached[tspec]
        n = len(stream)
        if n == 0:
            raise ValueError("empty stream")
        if algo == "fixedn" and m is not None:
            m = min(m, n)
        k = m
        if algo == "reservoir" and k is None:
            k = space_matched_reservoir_size(stream, epsilon, seed + trial)
        if report is None:
            report = ErrorReport(
                config={"algo": algo, "epsilon": epsilon, "m": k, "n": n, "seed": seed,
                        "trials": trials, "dist": spec.describe(), "stream_seed": spec.seed},
                tolerance=tol)
        pts = default_probes(algo, n, m) if probes is None else list(probes)
        report.records.extend(evaluate_once(algo, stream, epsilon, k, seed + trial, pts, phis, trial))
    return report


def space_matched_reservoir_size(stream: np.ndarray, epsilon: float, seed: int) -> int:
    """Peak live tuple count of the online summary on the same stream."""
    s = OnlineSummary(epsilon=epsilon, m=default_m("online", epsilon), seed=seed)
    s.extend(stream)
    return max(1, s.peak_tuples)


# -- run --------------------------------------------------------------------------------

def run_queries(algo: str, stream: np.ndarray, epsilon: float, m: Optional[int], seed: int,
                queries: Sequence[Tuple[int, float]]) -> List[Dict[str, Any]]:
    """Ingest ``stream`` and answer each ``(t, phi)`` query after item ``t``."""
    n = len(stream)
    if algo == "reservoir" and m is None:
        m = space_matched_reservoir_size(stream, epsilon, seed)
    summary = make_summary(algo, epsilon, n, m, seed)
    out = []
    t = 0
    for qt, phi in sorted(queries, key=lambda q: q[0]):
        if not 1 <= qt <= n:
            raise ValueError(f"query time {qt} outside [1, {n}]")
        if not 0 < phi <= 1:
            raise ValueError(f"phi must be in (0, 1], got {phi}")
        summary.extend(stream[t:qt])
        t = qt
        rho = phi_to_rank(phi, t)
        row: Dict[str, Any] = {"t": t, "phi": phi, "rho": rho, "answer": int(answer(summary, [rho])[0])}
        if algo == "online":
            row["row"] = summary.snapshot().row
        elif algo == "fixedn":
            row["guaranteed"] = summary.guaranteed
        out.append(row)
    return out


# -- bench ------------------------------------------------------------------------------

def _latency_histogram(samples_ns: Sequence[int]) -> Dict[str, int]:
    hist: Dict[str, int] = {}
    for ns in samples_ns:
        bucket = 1 << max(0, int(ns)).bit_length()
        key = f"<{bucket}ns"
        hist[key] = hist.get(key, 0) + 1
    return dict(sorted(hist.items(), key=lambda kv: int(kv[0][1:-2])))


def bench(algo: str, spec: StreamSpec, ns: Sequence[int], epsilon: float,
          m: Optional[int] = None, seed: int = 0,
          latency_items: Optional[int] = None) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """Space report (reproducible) and timing report (machine dependent).

    For the online summary the peak is taken over timesteps after row 0
    retires whenever ``n > 32 m``.
    """
    if algo not in ("gk", "online", "fixedn"):
        raise ValueError("bench supports gk, fixedn and online")
    if m is None and algo != "gk":
        m = default_m(algo, epsilon)
    runs = []
    timings = []
    for n in ns:
        stream = generate_stream(replace(spec, n=n))
        start = time.perf_counter()
        if algo == "online":
            run = _bench_online(stream, epsilon, m, seed)
        else:
            s = make_summary(algo, epsilon, n, m, seed)
            s.extend(stream)
            gk = s if algo == "gk" else s.gk
            run = {"n": n, "tuples": gk.tuple_count, "gk_insertions": gk.count}
        elapsed = time.perf_counter() - start
        runs.append(run)
        timings.append({"n": n, "seconds": elapsed, "items_per_sec": n / elapsed if elapsed else None})
    report: Dict[str, Any] = {"algo": algo, "epsilon": epsilon, "m": m, "seed": seed,
                              "dist": spec.describe(), "runs": runs}
    if algo == "online":
        peaks = [r["peak_tuples_after_row0"] for r in runs]
        report["space_spread"] = (max(peaks) - min(peaks)) / min(peaks) if min(peaks) else None
        report["cap_respected"] = all(r["cap_respected"] for r in runs)
    elif len(runs) >= 2 and algo == "gk":
        lo, hi = runs[0], runs[-1]
        report["tuple_ratio"] = hi["tuples"] / lo["tuples"]
        report["log_ratio"] = (math.log(max(epsilon * hi["n"], 2))
                               / math.log(max(epsilon * lo["n"], 2)))
    timing: Dict[str, Any] = {"runs": timings}
    if latency_items is None:
        latency_items = min(max(ns), 4 * m if m else 1 << 16)
    if latency_items:
        stream = generate_stream(replace(spec, n=latency_items))
        s = make_summary(algo, epsilon, max(latency_items, max(ns)), m, seed)
        clock = time.perf_counter_ns
        lat = []
        for x in stream.tolist():
            t0 = clock()
            s.insert(x)
            lat.append(clock() - t0)
        timing["latency_items"] = latency_items
        timing["max_latency_ns"] = max(lat)
        timing["max_latency_bucket"] = f"<{1 << max(lat).bit_length()}ns"
        timing["latency_histogram"] = _latency_histogram(lat)
    return report, timing


def _bench_online(stream: np.ndarray, epsilon: float, m: int, seed: int) -> Dict[str, Any]:
    s = OnlineSummary(epsilon=epsilon, m=m, seed=seed)
    n = len(stream)
    row0_end = retirement_time(0, m)
    if n > row0_end:
        s.extend(stream[:row0_end + 1])  # row 0 retires before item 32m + 1
        s.reset_peak()
        s.extend(stream[row0_end + 1:])
        after = s.peak_tuples
    else:
        s.extend(stream)
        after = None
    insertions = dict(s.retired_insertions)
    insertions.update(s.stats().gk_insertions)
    later = [v for r, v in insertions.items() if r >= 1]
    return {
        "n": n,
        "peak_tuples_after_row0": after,
        "final_tuples": s.total_tuples,
        "gk_insertions": {str(r): v for r, v in sorted(insertions.items())},
        "max_gk_insertions_rows_ge_1": max(later) if later else 0,
        "cap": 2 * m,
        "cap_respected": all(v <= 2 * m for v in later),
        "final_live_rows": s.stats().live_rows,
    }


# -- goodness ---------------------------------------------------------------------------

def log2_inv_eps(epsilon: float) -> int:
    """``d = log2(1/eps)``, rounded up to a whole number of rows."""
    return max(1, math.ceil(math.log2(1 / epsilon) - 1e-12))


def goodness_fixed_rate(m: int, n: int, epsilon: float, trials: int, seed: int = 0,
                        stream: Optional[np.ndarray] = None) -> Dict[str, Any]:
    """Monte Carlo of the Bernoulli-sampling size and rank bounds at rate ``m/n``.

    Size events are checked at ``t = n`` and ``t = ceil(n / 64)``.  The rank
    estimate ``(n/m) rank(y, S_t)`` is compared with ``rank(y, X_t)`` at
    ``t = n`` for ``y`` the median of the stream.
    """
    if n > scale_cap():
        raise ScaleError(f"n={n} exceeds QS_SCALE_CAP={scale_cap()}")
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    if stream is None:
        stream = generate_stream(StreamSpec("uniform", n, seed))
    t_small = math.ceil(n / 64)
    y = np.sort(stream)[(n - 1) // 2]
    below = stream <= y
    true_rank = int(below.sum())
    limit = epsilon * n / 8
    big_n = big_small = over = under = 0
    for trial in range(trials):
        mask = BernoulliSampler((m, n), seed + trial).offer_many(n)
        big_n += int(mask.sum()) > 2 * m
        big_small += int(mask[:t_small].sum()) > 2 * t_small * m / n
        dev = int(np.count_nonzero(mask & below)) * n / m - true_rank
        over += dev > limit
        under += dev < -limit
    return {
        "mode": "fixed-rate",
        "m": m, "n": n, "epsilon": epsilon, "trials": trials, "seed": seed,
        "rate": f"{m}/{n}",
        "p_size_exceeds_2m_at_n": big_n / trials,
        "p_size_exceeds_at_n_over_64": big_small / trials,
        "predicted_size_bound": math.exp(-m / 192),
        "p_rank_dev_one_sided_high": over / trials,
        "p_rank_dev_one_sided_low": under / trials,
        "p_rank_dev_two_sided": (over + under) / trials,
        "predicted_rank_bound": min(1.0, 2 * math.exp(-epsilon ** 2 * m / 12288)),
    }


def _row_events(samples: Sequence[int], y_stream: np.ndarray, divisor: int, m: int,
                epsilon: float, t: int) -> Tuple[bool, bool, float]:
    size_event = len(samples) > 2 * m
    first = np.asarray(samples[:2 * m], dtype=np.int64)
    if len(first) == 0:
        return size_event, False, 0.0
    first_sorted = np.sort(first)
    y_sorted = np.sort(y_stream)
    rank_s = np.searchsorted(first_sorted, first, side="right")
    rank_y = np.searchsorted(y_sorted, first, side="right")
    worst = float(np.max(np.abs(divisor * rank_s - rank_y)))
    return size_event, worst > epsilon * t / 8, worst / t


def goodness_online(config: OnlineConfig, spec: StreamSpec, trials: int) -> Dict[str, Any]:
    """Frequencies of the per-row size event (more than 2m samples) and rank event.

    The rank event is a sampled rank estimate straying more than eps t / 8.

    Runs an instrumented summary that keeps every sample stream.  Row ``r``
    is judged at ``t = 2**r m``, when row ``r + 1``'s replacement is read off
    it; the row active at the end of the stream is judged at ``t = n``.
    """
    n = spec.n
    if n is None or n > scale_cap():
        raise ScaleError(f"n={n} exceeds QS_SCALE_CAP={scale_cap()}")
    m, eps = config.m, config.epsilon
    d = log2_inv_eps(eps)
    per_row: Dict[int, Dict[str, int]] = {}
    recent_all_good = 0
    final_active = None
    for trial in range(trials):
        stream = generate_stream(trial_stream(spec, trial))
        s = OnlineSummary(replace(config, seed=config.seed + trial), record=True)
        checkpoints = sorted({m << r for r in range(1, 63) if m << r <= n} | {n})
        judged: Dict[int, Tuple[int, int]] = {}  # row -> (time, samples seen then)
        t = 0
        for cp in checkpoints:
            s.extend(stream[t:cp])
            t = cp
            for row in s.rows:
                if row.r >= 1 and (m << row.r) == cp:
                    judged[row.r] = (cp, len(row.samples))
        final_active = s.active
        rows = {rw.r: rw for rw in s.retired + s.rows}
        if final_active >= 1:
            judged[final_active] = (n, len(rows[final_active].samples))
        bad_rows = set()
        for r, (tau, count) in sorted(judged.items()):
            row = rows[r]
            t_r = m << (r - 1)
            y_stream = np.concatenate([np.asarray(row.replacement.expand(), dtype=np.int64),
                                       stream[t_r:tau]])
            ea, eb, worst = _row_events(row.samples[:count], y_stream, row.divisor, m, eps, tau)
            acc = per_row.setdefault(r, {"trials": 0, "size": 0, "rank": 0, "bad": 0, "t": tau})
            acc["trials"] += 1
            acc["size"] += ea
            acc["rank"] += eb
            acc["bad"] += ea or eb
            acc["worst_norm_dev"] = max(acc.get("worst_norm_dev", 0.0), worst)
            if ea or eb:
                bad_rows.add(r)
        recent_rows = [final_active] + [r for r in range(final_active - 1, final_active - d - 1, -1)
                                       if r >= 1]
        recent_all_good += not (bad_rows & set(recent_rows))
    rows_out = []
    for r, acc in sorted(per_row.items()):
        rows_out.append({
            "row": r, "t": acc["t"], "trials": acc["trials"],
            "p_size_event": acc["size"] / acc["trials"], "p_rank_event": acc["rank"] / acc["trials"],
            "p_bad": acc["bad"] / acc["trials"], "worst_norm_dev": acc["worst_norm_dev"],
        })
    if not config.row0_sampled:
        rows_out.insert(0, {"row": 0, "trivial": True, "p_size_event": 0.0, "p_rank_event": 0.0, "p_bad": 0.0})
    return {
        "mode": "online",
        "epsilon": eps, "m": m, "n": n, "seed": config.seed, "trials": trials,
        "dist": spec.describe(),
        "d": d,
        "active_row": final_active,
        "recent_rows": [r for r in [final_active] + list(range(final_active - 1, final_active - d - 1, -1))
                       if r >= 0],
        "p_recent_rows_all_good": recent_all_good / trials,
        "predicted_size_bound": math.exp(-m / 192),
        "predicted_rank_bound_union": min(1.0, 4 * m * math.exp(-eps ** 2 * m / 12288)),
        "rows": rows_out,
    }
