"""
Command-line interface: ``msgflow simulate|analyze|flow|executor|metrics|validate``.

Outputs go to files or standard output; logs and diagnostics go to standard
error. Exit codes: 0 ok, 1 other failure, 2 trace parse error, 3 clock sync
failure, 4 seed not found.
"""

import argparse
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__
from .core.config import AnalysisConfig, SyncMode
from .core.errors import (
    InfeasibleOffsets,
    MsgflowError,
    SeedNotFound,
    SyncError,
    TraceError,
)
from .core.utils import dumps_document, write_document

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_PARSE = 2
EXIT_SYNC = 3
EXIT_SEED = 4


def _emit(data: bytes, out: Optional[str]) -> None:
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _print_diagnostics(diagnostics) -> None:
    counts = Counter(d.code.value for d in diagnostics)
    if not counts:
        return
    print("diagnostics:", file=sys.stderr)
    for code, n in sorted(counts.items()):
        print(f"  {code}: {n}", file=sys.stderr)


def _load_document(path: str):
    from .analysis.document import AnalysisDocument
    return AnalysisDocument.load(path)


# =============================================================================
# Subcommands
# =============================================================================

def cmd_simulate(args: argparse.Namespace) -> int:
    from .sim import builtin_names, load_scenario, simulate
    from .trace.bundle import write_bundle

    if args.list:
        print("\n".join(builtin_names()))
        return EXIT_OK
    if not args.scenario or not args.out_dir:
        print("simulate needs --scenario and --out-dir", file=sys.stderr)
        return EXIT_OTHER

    config = load_scenario(args.scenario)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    if args.duration_ms is not None:
        config = config.with_overrides(duration_ns=int(args.duration_ms * 1_000_000))

    bundle, truth = simulate(config)
    out_dir = Path(args.out_dir)
    paths = write_bundle(bundle, out_dir)
    write_document(out_dir / "ground_truth.json", truth.to_dict())
    if args.write_scenario:
        write_document(out_dir / "scenario.json", config.to_dict())
    print(f"{config.name} seed {config.seed}: {bundle.event_count} events on {len(paths)} hosts -> {out_dir}",
          file=sys.stderr)
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    from .analysis.document import analyze_bundle
    from .trace.bundle import load_bundle

    if not args.traces:
        print("no trace files given", file=sys.stderr)
        return EXIT_PARSE

    config = AnalysisConfig.load({
        "sync_mode": args.sync_mode,
        "reference_host": args.reference_host,
        "min_one_way_delay_ns": args.min_one_way_delay_ns,
        "cache_dir": args.cache_dir,
    })

    cache = None
    key = None
    if config.cache_dir:
        from .core.cache import AnalysisCache
        cache = AnalysisCache(config.cache_dir)
        key = cache.cache_key(args.traces, config.cache_key_fields())
        cached = cache.get(key)
        if cached is not None:
            _emit(cached, args.out)
            cache.close()
            return EXIT_OK

    try:
        bundle = load_bundle(args.traces)
        if bundle.event_count == 0:
            print("trace files contain no events", file=sys.stderr)
            return EXIT_PARSE

        doc = analyze_bundle(bundle, config)
        data = dumps_document(doc.to_dict())
        if cache is not None:
            cache.set(key, data)
    finally:
        if cache is not None:
            cache.close()

    _emit(data, args.out)
    summary = doc.links.summary()
    print("links: " + ", ".join(f"{k}={v}" for k, v in summary.items()), file=sys.stderr)
    print("clock: " + ", ".join(f"{m.host}{m.offset:+d}" for m in doc.clock), file=sys.stderr)
    _print_diagnostics(doc.diagnostics)
    return EXIT_OK


def _seed_from_args(args: argparse.Namespace):
    from .analysis.flow import SeedSelector

    if args.publication:
        topic, sep, ts = args.publication.rpartition("@")
        if not sep or not topic:
            raise ValueError(f"--publication expects TOPIC@SOURCE_TS, got {args.publication!r}")
        return SeedSelector.publication(topic, int(ts))
    if args.callback:
        obj, index = args.callback
        return SeedSelector.callback(obj, int(index))
    obj, ts = args.callback_at
    return SeedSelector.callback_at(obj, int(ts))


def cmd_flow(args: argparse.Namespace) -> int:
    from .analysis.flow import build_flow, end_to_end_latency, export_flow

    doc = _load_document(args.document)
    config = AnalysisConfig.load({"px_per_ms": args.px_per_ms})
    try:
        seed = _seed_from_args(args)
    except ValueError as e:
        print(str(e), file=sys.stderr)
        return EXIT_OTHER

    graph = build_flow(doc.ir, doc.links, seed, args.direction)
    _emit(export_flow(graph, args.format, doc.diagnostics, config.px_per_ms), args.out)

    table = sys.stdout if args.out else sys.stderr
    print(f"{'leaf':<60} {'latency_ns':>14}  breakdown", file=table)
    for row in end_to_end_latency(graph):
        leaf = f"{row.leaf[0].value} {row.leaf[1]}"
        parts = ", ".join(f"{k}={v}" for k, v in sorted(row.breakdown.items()))
        print(f"{leaf:<60} {row.latency:>14}  {parts}", file=table)
    return EXIT_OK


def cmd_executor(args: argparse.Namespace) -> int:
    from .analysis.timeline import build_timeline, export_timeline

    doc = _load_document(args.document)
    config = AnalysisConfig.load({"px_per_ms": args.px_per_ms, "lane_height_px": args.lane_height_px})
    window = tuple(args.window) if args.window else doc.ir.time_span()
    lanes = build_timeline(doc.ir, window)
    _emit(export_timeline(lanes, args.format, window, config.px_per_ms, config.lane_height_px), args.out)
    return EXIT_OK


def cmd_metrics(args: argparse.Namespace) -> int:
    import pandas as pd

    from .analysis.metrics import MetricsEngine, format_table

    doc = _load_document(args.document)
    if args.table == "transport":
        df = MetricsEngine.transport_latency_table(doc.links)
    elif args.table == "callbacks":
        df = MetricsEngine.callback_duration_table(doc.ir)
    elif args.table == "utilization":
        df = MetricsEngine.utilization_table(doc.ir)
    else:
        counts = MetricsEngine.diagnostic_counts(doc.ir, doc.links)
        df = pd.DataFrame(list(counts.items()), columns=["code", "count"])
    _emit(format_table(df, args.format).encode(), args.out)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    from .analysis.validate import validate
    from .core.utils import read_document
    from .sim.truth import GroundTruth

    doc = _load_document(args.document)
    truth = GroundTruth.from_dict(read_document(args.ground_truth))
    report = validate(doc, truth)
    _emit(dumps_document(report.to_dict()), args.out)
    if not report.ok:
        print(f"validation failed against {truth.scenario} seed {truth.seed}", file=sys.stderr)
        return EXIT_OTHER
    return EXIT_OK


# =============================================================================
# Parser
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msgflow", description="Message flow analysis for distributed traces.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate traces and ground truth from a scenario")
    p.add_argument("--scenario", help="builtin scenario name or scenario JSON path")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--duration-ms", type=float, help="override the scenario duration")
    p.add_argument("--out-dir", help="directory for <host>.jsonl and ground_truth.json")
    p.add_argument("--write-scenario", action="store_true", help="also write the resolved scenario.json")
    p.add_argument("--list", action="store_true", help="list builtin scenarios and exit")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="build the analysis document from trace files")
    p.add_argument("traces", nargs="*", help="one <host>.jsonl trace file per host")
    p.add_argument("-o", "--out", help="output document (default: stdout)")
    p.add_argument("--sync-mode", choices=[m.value for m in SyncMode], help="clock synchronization mode")
    p.add_argument("--reference-host", help="reference clock (default: smallest host id)")
    p.add_argument("--min-one-way-delay-ns", type=int, help="lower bound on one-way network delay")
    p.add_argument("--cache-dir", help="reuse documents for unchanged traces and settings")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("flow", help="build a message flow graph around a seed")
    p.add_argument("document", help="analysis document")
    seed = p.add_mutually_exclusive_group(required=True)
    seed.add_argument("--publication", metavar="TOPIC@SOURCE_TS", help="publication seed")
    seed.add_argument("--callback", nargs=2, metavar=("OBJECT", "K"), help="k-th callback instance of an object")
    seed.add_argument("--callback-at", nargs=2, metavar=("OBJECT", "TS"), help="callback instance covering TS")
    p.add_argument("--direction", choices=["forward", "backward", "both"], default="both")
    p.add_argument("--format", choices=["dot", "json", "svg-timeline", "html"], default="json")
    p.add_argument("--px-per-ms", type=float, help="svg-timeline horizontal scale")
    p.add_argument("-o", "--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("executor", help="executor state timeline and utilization")
    p.add_argument("document", help="analysis document")
    p.add_argument("--window", nargs=2, type=int, metavar=("T0", "T1"), help="time window in ns")
    p.add_argument("--format", choices=["json", "svg", "html"], default="json")
    p.add_argument("--px-per-ms", type=float, help="svg horizontal scale")
    p.add_argument("--lane-height-px", type=int, help="svg lane height")
    p.add_argument("-o", "--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_executor)

    p = sub.add_parser("metrics", help="latency, duration and utilization tables")
    p.add_argument("document", help="analysis document")
    p.add_argument("--table", choices=["transport", "callbacks", "utilization", "diagnostics"], default="transport")
    p.add_argument("--format", choices=["text", "csv", "json"], default="text")
    p.add_argument("-o", "--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("validate", help="diff an analysis document against simulator ground truth")
    p.add_argument("document", help="analysis document")
    p.add_argument("ground_truth", help="ground_truth.json written by simulate")
    p.add_argument("-o", "--out", help="report file (default: stdout)")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        return args.func(args)
    except TraceError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except InfeasibleOffsets as e:
        print(f"error: {e} (feasible interval [{e.lower}, {e.upper}])", file=sys.stderr)
        return EXIT_SYNC
    except SyncError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SYNC
    except SeedNotFound as e:
        print(f"error: {e}", file=sys.stderr)
        for candidate in e.candidates:
            print(f"  candidate: {candidate}", file=sys.stderr)
        return EXIT_SEED
    except MsgflowError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_OTHER
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_OTHER


def run(argv: Optional[List[str]] = None) -> None:
    sys.exit(main(argv))
