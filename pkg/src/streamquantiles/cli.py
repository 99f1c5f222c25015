"""Command line front end.

    streamquantiles run      --algo online --epsilon 0.1 --n 100000 --queries 0.5,0.9
    streamquantiles eval     --algo online --epsilon 0.1 --m 5120 --n 200000 --trials 5
    streamquantiles bench    --algo online --epsilon 0.1 --m 5120 --n 1000000,10000000
    streamquantiles goodness --algo fixedn --m 1000 --n 64000 --trials 1000

Exit codes: 0 ok, 1 check failure (``--max-failure`` / ``--max-spread``),
2 usage or input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from . import harness
from .online import OnlineConfig
from .oracle import DEFAULT_PHIS, StreamFormatError, StreamSpec, generate_stream

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SUBCOMMANDS = ("run", "eval", "bench", "goodness")
FORMATS = ("json", "csv", "human")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    algo: str = "online"
    epsilon: float = 0.1
    m: Optional[int] = None
    n: Tuple[int, ...] = (100_000,)
    seed: int = 0
    dist: str = "uniform"
    queries: Optional[str] = None
    probes: Optional[Tuple[int, ...]] = None
    phis: Optional[Tuple[float, ...]] = None
    trials: int = 1
    format: str = "json"
    out: Optional[str] = None
    max_failure: Optional[float] = None
    max_spread: Optional[float] = None
    latency_items: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        for key in ("n", "probes", "phis"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "RunConfig":
        d = dict(d)
        for key in ("n", "probes", "phis"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return cls(**d)

    def to_argv(self) -> List[str]:
        argv = [self.subcommand]
        defaults = RunConfig(self.subcommand)
        for f in fields(self):
            if f.name == "subcommand":
                continue
            value = getattr(self, f.name)
            if value is None or value == getattr(defaults, f.name):
                continue
            if isinstance(value, tuple):
                value = ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
            argv += ["--" + f.name.replace("_", "-"), str(value)]
        return argv


def _int_list(text: str) -> Tuple[int, ...]:
    try:
        values = tuple(int(float(v)) if "e" in v.lower() else int(v)
                       for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _float_list(text: str) -> Tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _int(text: str) -> int:
    try:
        return int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="streamquantiles",
                     description="Streaming quantile summaries and their evaluation harness.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--algo", choices=harness.ALGORITHMS, default="online")
        p.add_argument("--epsilon", type=float, default=0.1)
        p.add_argument("--m", type=_int, default=None,
                       help="row/sample size (reservoir: reservoir size)")
        p.add_argument("--n", type=_int_list, default=(100_000,),
                       help="stream length; bench accepts a comma-separated list")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--dist", default="uniform",
                       help="sorted|reversed|uniform|zipf|sawtooth|file:PATH")
        p.add_argument("--queries", default=None,
                       help="PATH or LIST of PHI or T:PHI entries")
        p.add_argument("--probes", type=_int_list, default=None)
        p.add_argument("--phis", type=_float_list, default=None)
        p.add_argument("--trials", type=int, default=1)
        p.add_argument("--format", choices=FORMATS, default="json")
        p.add_argument("--out", default=None)
        p.add_argument("--max-failure", type=float, default=None,
                       help="eval: exit 1 if the failure fraction exceeds this")
        p.add_argument("--max-spread", type=float, default=None,
                       help="bench: exit 1 if peak space differs by more than this across n")
        p.add_argument("--latency-items", type=_int, default=None)
    return parser


def parse_config(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(list(argv))
    return RunConfig(**{f.name: getattr(ns, f.name) for f in fields(RunConfig)})


# -- query parsing ------------------------------------------------------------------

def _parse_query_tokens(tokens: List[str], n: int) -> List[Tuple[int, float]]:
    out = []
    for tok in tokens:
        t_text, sep, phi_text = tok.partition(":")
        try:
            if sep:
                out.append((_int(t_text.strip()), float(phi_text)))
            else:
                out.append((n, float(t_text)))
        except (ValueError, argparse.ArgumentTypeError):
            raise UsageError(f"bad query {tok!r}; expected PHI or T:PHI")
    return out


def parse_queries(cfg: RunConfig, n: int) -> List[Tuple[int, float]]:
    if cfg.queries:
        path = Path(cfg.queries)
        if path.is_file():
            tokens = []
            for line in path.read_text(encoding="utf-8").splitlines():
                line = line.strip()
                if line and not line.startswith("#"):
                    parts = line.replace(",", " ").split()
                    tokens.append(parts[0] if len(parts) == 1 else f"{parts[0]}:{parts[1]}")
        else:
            tokens = [tok for tok in cfg.queries.split(",") if tok.strip()]
        return _parse_query_tokens(tokens, n)
    probes = cfg.probes or (n,)
    phis = cfg.phis or DEFAULT_PHIS
    return [(t, phi) for t in probes for phi in phis]


# -- output ----------------------------------------------------------------------------

def _rows_csv(rows: List[Dict[str, Any]]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _human(obj: Any, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        lines = []
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.append(_human(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {v}")
        return "\n".join(lines)
    if isinstance(obj, list):
        if obj and isinstance(obj[0], dict):
            cols = list(obj[0])
            widths = [max(len(c), *(len(str(r.get(c, ""))) for r in obj)) for c in cols]
            head = pad + "  ".join(c.rjust(w) for c, w in zip(cols, widths))
            body = [pad + "  ".join(str(r.get(c, "")).rjust(w) for c, w in zip(cols, widths))
                    for r in obj]
            return "\n".join([head] + body)
        return pad + ", ".join(str(v) for v in obj)
    return pad + str(obj)


def _dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def render(result: Any, fmt: str, csv_rows: Optional[List[Dict[str, Any]]] = None) -> str:
    if fmt == "json":
        return _dump_json(result)
    if fmt == "csv":
        return _rows_csv(csv_rows if csv_rows is not None else [result])
    return _human(result) + "\n"


# -- commands ----------------------------------------------------------------------------

def _stream_spec(cfg: RunConfig, n: Optional[int]) -> StreamSpec:
    try:
        return StreamSpec.parse(cfg.dist, n, cfg.seed)
    except ValueError as exc:
        raise UsageError(str(exc))


def _single_n(cfg: RunConfig) -> int:
    if len(cfg.n) != 1:
        raise UsageError(f"{cfg.subcommand} takes a single --n")
    return cfg.n[0]


def cmd_run(cfg: RunConfig) -> int:
    spec = _stream_spec(cfg, None if cfg.dist.startswith("file:") else _single_n(cfg))
    stream = generate_stream(spec)
    queries = parse_queries(cfg, len(stream))
    rows = harness.run_queries(cfg.algo, stream, cfg.epsilon, cfg.m, cfg.seed, queries)
    result = {"algo": cfg.algo, "epsilon": cfg.epsilon, "m": cfg.m, "n": len(stream),
              "seed": cfg.seed, "dist": spec.describe(), "answers": rows}
    _emit(render(result, cfg.format, rows), cfg)
    return EXIT_OK


def cmd_eval(cfg: RunConfig) -> int:
    spec = _stream_spec(cfg, None if cfg.dist.startswith("file:") else _single_n(cfg))
    report = harness.evaluate(cfg.algo, spec, cfg.epsilon, cfg.m, cfg.trials, cfg.seed,
                              cfg.probes, cfg.phis or DEFAULT_PHIS)
    if cfg.format == "json":
        text = report.to_json()
    elif cfg.format == "csv":
        text = report.to_csv()
    else:
        d = report.to_dict()
        d.pop("records")
        text = _human(d) + "\n"
    _emit(text, cfg)
    if cfg.max_failure is not None and report.failure_fraction() > cfg.max_failure:
        print(f"failure fraction {report.failure_fraction():.4f} exceeds {cfg.max_failure}",
              file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_bench(cfg: RunConfig) -> int:
    if cfg.dist.startswith("file:"):
        raise UsageError("bench needs a generated stream")
    spec = _stream_spec(cfg, cfg.n[0])
    report, timing = harness.bench(cfg.algo, spec, cfg.n, cfg.epsilon, cfg.m, cfg.seed,
                                   cfg.latency_items)
    rows = [{k: (json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else v)
             for k, v in run.items()} for run in report["runs"]]
    _emit(render(report, cfg.format, rows), cfg)
    # timing is machine dependent: kept apart so reports stay byte-reproducible
    if cfg.out:
        Path(cfg.out + ".timing.json").write_text(_dump_json(timing), encoding="utf-8")
    for run in timing["runs"]:
        print(f"n={run['n']}: {run['items_per_sec']:.0f} items/s", file=sys.stderr)
    if "max_latency_ns" in timing:
        print(f"max per-item latency {timing['max_latency_ns']} ns "
              f"({timing['max_latency_bucket']})", file=sys.stderr)
    spread = report.get("space_spread")
    if cfg.max_spread is not None and spread is not None and spread > cfg.max_spread:
        print(f"space spread {spread:.4f} exceeds {cfg.max_spread}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_goodness(cfg: RunConfig) -> int:
    n = _single_n(cfg)
    if cfg.algo == "fixedn":
        m = cfg.m or min(harness.default_m("fixedn", cfg.epsilon), n)
        result = harness.goodness_fixed_rate(m, n, cfg.epsilon, cfg.trials, cfg.seed)
    elif cfg.algo == "online":
        m = cfg.m or harness.default_m("online", cfg.epsilon)
        config = OnlineConfig(cfg.epsilon, m, cfg.seed)
        result = harness.goodness_online(config, _stream_spec(cfg, n), cfg.trials)
    else:
        raise UsageError("goodness supports --algo fixedn or online")
    _emit(render(result, cfg.format, result.get("rows")), cfg)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "eval": cmd_eval, "bench": cmd_bench, "goodness": cmd_goodness}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.subcommand](cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (StreamFormatError, harness.ScaleError, ValueError, OSError) as exc:
        print(f"streamquantiles: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
