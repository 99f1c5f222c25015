"""Streaming quantile summaries for the cash-register, comparison-model setting.

* :class:`GKSummary` - deterministic Greenwald-Khanna summary.
* :class:`BernoulliSampler` - seeded sampling at an exact rational rate.
* :class:`FixedNSummary` - sample-then-GK summary for a stream of known length.
* :class:`OnlineSummary` - fully online summary built from rows of the above.
* :class:`ExactOracle`, :func:`generate_stream`, :func:`evaluate` - ground truth
  and evaluation harness.
"""
from .baseline import ReservoirSample
from .fixed_n import FixedNAnswer, FixedNSummary, default_sample_size, union_bound_sample_size
from .gk import GKSummary, GKTuple
from .harness import evaluate
from .online import (OnlineConfig, OnlineSnapshot, OnlineStats, OnlineSummary, ReplacementQueue,
                     Row, generate_replacement, replacement_ranks)
from .oracle import ErrorReport, ExactOracle, StreamSpec, generate_stream
from .sampler import BernoulliSampler

__all__ = [
    "BernoulliSampler", "ErrorReport", "ExactOracle", "FixedNAnswer", "FixedNSummary",
    "GKSummary", "GKTuple", "OnlineConfig", "OnlineSnapshot", "OnlineStats", "OnlineSummary",
    "ReplacementQueue", "ReservoirSample", "Row", "StreamSpec", "default_sample_size",
    "evaluate", "generate_replacement", "generate_stream", "union_bound_sample_size",
    "replacement_ranks",
]

__version__ = "0.1.0"
