"""Command-line driver: ``netoption {price,delta,hedge,paths,selftest}``.

Results go to stdout (or ``--output``) as CSV or JSON and depend only on the
config and seed. Run metadata, including wall time, goes to stderr so that
reports stay byte-identical across runs and thread counts.

Exit codes: 0 success, 1 config error, 2 numerical failure, 3 selftest failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

from .checks import pricing_suite
from .config import ConfigError, ExperimentConfig, load_config
from .hedging import DegenerateHedge, simulate_hedged_portfolio
from .network import NoPath
from .pricing import EmptyPathSet, combined_stderr, value_network_option
from .sde import NotPositiveDefinite

COMMANDS = ("price", "delta", "hedge", "paths", "selftest")
HEADERS = {
    "price": ("estimator", "value", "stderr", "n_samples", "seed"),
    "delta": ("resource", "delta", "stderr"),
    "hedge": ("time", "mean_value", "std_value"),
    "histogram": ("bin_left", "bin_right", "count"),
    "paths": ("path_index", "node_sequence", "cost_weights"),
    "selftest": ("criterion", "status", "detail"),
}
EXIT_CONFIG, EXIT_NUMERICAL, EXIT_SELFTEST = 1, 2, 3


@dataclass
class RunReport:
    command: str
    config_digest: str
    seed: int
    rows: list[tuple]
    extra_blocks: dict[str, list[tuple]] = field(default_factory=dict)
    wall_time: float = 0.0
    passed: bool = True

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(HEADERS[self.command])
        writer.writerows(_cells(row) for row in self.rows)
        for name, rows in self.extra_blocks.items():
            buf.write("\n")
            writer.writerow(HEADERS[name])
            writer.writerows(_cells(row) for row in rows)
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "command": self.command,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "rows": [dict(zip(HEADERS[self.command], row)) for row in self.rows],
        }
        for name, rows in self.extra_blocks.items():
            doc[name] = [dict(zip(HEADERS[name], row)) for row in rows]
        return json.dumps(doc, indent=2) + "\n"


def _cells(row):
    return ["" if x is None else repr(x) if isinstance(x, float) else x for x in row]


# ---------------------------------------------------------------- commands


def _price(cfg: ExperimentConfig, threads: int) -> list[tuple]:
    c, mc = cfg.build_contract(), cfg.build_mc()
    val = value_network_option(c, mc, threads)
    se = combined_stderr(val.direct, val.girsanov)
    diff = val.direct.value - val.girsanov.value
    z = diff / se if se > 0 else 0.0
    n, seed = mc.n_samples, mc.seed
    return [
        ("direct", val.direct.value, val.direct.stderr, n, seed),
        ("girsanov", val.girsanov.value, val.girsanov.stderr, n, seed),
        ("difference", diff, se, n, seed),
        ("difference_sigmas", z, None, n, seed),
    ]


def _delta(cfg: ExperimentConfig, threads: int) -> list[tuple]:
    c = cfg.build_contract()
    val = value_network_option(c, cfg.build_mc(), threads)
    rows = [(name, d.value, d.stderr) for name, d in zip(c.incidence.resources, val.deltas)]
    rows.append(("reconstruction_residual", val.reconstruction_residual, None))
    return rows


def _hedge(cfg: ExperimentConfig, threads: int):
    stats = simulate_hedged_portfolio(cfg.build_hedge(), threads)
    series = [
        (float(t), float(m), float(s))
        for t, m, s in zip(stats.times, stats.mean_value, stats.std_value)
    ]
    hist = [
        (float(a), float(b), int(k))
        for a, b, k in zip(stats.bin_edges[:-1], stats.bin_edges[1:], stats.counts)
    ]
    note = f"initial value {stats.initial_value!r}, dropped {stats.n_dropped}/{stats.n_paths}, clamps {stats.clamps}"
    return series, {"histogram": hist}, note


def _paths(cfg: ExperimentConfig) -> list[tuple]:
    inc = cfg.build_incidence()
    return [
        (i, "-".join(label), " ".join(repr(float(x)) for x in row))
        for i, (label, row) in enumerate(zip(inc.path_labels, inc.v))
    ]


def _selftest(cfg: ExperimentConfig, threads: int):
    results = pricing_suite(cfg.build_contract(), cfg.build_mc(), threads)
    for r in results:
        print(f"{r.line()} ({r.seconds:.2f} s)", file=sys.stderr)
    rows = [(r.name, "PASS" if r.passed else "FAIL", r.detail) for r in results]
    return rows, all(r.passed for r in results)


def run_experiment(command: str, cfg: ExperimentConfig, threads: int = 1) -> RunReport:
    start = time.perf_counter()
    extra: dict[str, list[tuple]] = {}
    passed = True
    note = ""
    if command == "price":
        rows = _price(cfg, threads)
    elif command == "delta":
        rows = _delta(cfg, threads)
    elif command == "hedge":
        rows, extra, note = _hedge(cfg, threads)
    elif command == "paths":
        rows = _paths(cfg)
    elif command == "selftest":
        rows, passed = _selftest(cfg, threads)
    else:
        raise ValueError(f"unknown command {command!r}")
    report = RunReport(command, cfg.digest(), cfg.mc.seed, rows, extra, time.perf_counter() - start, passed)
    if note:
        print(f"# {note}", file=sys.stderr)
    return report


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netoption", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument(
        "--config",
        help="JSON config path or a bundled name (diamond, hedge); "
        "defaults to 'hedge' for the hedge command and 'diamond' otherwise",
    )
    p.add_argument("--samples", type=int, help="override mc.n_samples")
    p.add_argument("--paths", type=int, dest="n_paths", help="override hedge.n_paths")
    p.add_argument("--seed", type=int, help="override mc.seed")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    doc = cfg.to_dict()
    if args.samples is not None:
        doc.setdefault("mc", {})["n_samples"] = args.samples
    if args.seed is not None:
        doc.setdefault("mc", {})["seed"] = args.seed
    if args.n_paths is not None:
        if "hedge" not in doc:
            raise ConfigError("hedge.n_paths", "--paths given but the config has no hedge section")
        doc["hedge"]["n_paths"] = args.n_paths
    return ExperimentConfig.from_dict(doc)


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    source = args.config or ("hedge" if args.command == "hedge" else "diamond")
    try:
        cfg = _apply_overrides(load_config(source), args)
        if args.threads < 1:
            raise ConfigError("--threads", "must be >= 1")
        if args.dump_config:
            _emit(json.dumps(cfg.to_dict(), indent=2) + "\n", args.output)
            return 0
        report = run_experiment(args.command, cfg, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NotPositiveDefinite, DegenerateHedge, NoPath, EmptyPathSet, ArithmeticError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    _emit(report.to_json() if args.format == "json" else report.to_csv(), args.output)
    print(
        f"# {report.command} config={report.config_digest} seed={report.seed} "
        f"wall_time={report.wall_time:.2f}s",
        file=sys.stderr,
    )
    if not report.passed:
        return EXIT_SELFTEST
    return 0


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
