#!/usr/bin/env python3
"""
DP-SQLP - command line entry point.
Runs the streaming engine and baselines, generates data and evaluates results.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from dpsqlp.bench import (
    ENGINES,
    ColumnMapping,
    ZipfMandelbrotDist,
    average_rows,
    compare,
    final_truth,
    generate_synthetic,
    ground_truth,
    ingest,
    run_engine,
    score,
    sweep_contribution_bound,
    write_records,
    write_rows_csv,
)
from dpsqlp.bench.zipf import KEY_DIST_PARAMS
from dpsqlp.bounding import suggest_contribution_bound
from dpsqlp.engine import PipelineConfig, WindowSpec
from dpsqlp.engine.config import DAY_SECONDS, DEFAULT_BETA, parse_instant
from dpsqlp.engine.sink import read_releases, write_json, write_releases
from dpsqlp.errors import DpSqlpError
from dpsqlp.logs import configure_logging
from dpsqlp.query import show_recent, show_run, show_stats
from dpsqlp.seeding import derive_seed
from dpsqlp.storage import get_results_store


def _add_input_args(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--input", required=required, help="Records file (.csv or .jsonl)")
    parser.add_argument("--format", choices=["csv", "jsonl"], help="Input format (default: from suffix)")
    parser.add_argument("--mapping", help="Field mapping, e.g. 'key=subreddit,user_id=author'")
    parser.add_argument("--on-error", choices=["abort", "skip"], default="abort", help="Malformed row policy")
    parser.add_argument("--count-users", action="store_true", help="Treat every record as value 1")


def _add_run_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--state", help="State directory (default: $DPSQLP_STATE_DIR, else in memory)")
    parser.add_argument("--epsilon", type=float, default=6.0)
    parser.add_argument("--delta", type=float, default=1e-9)
    parser.add_argument("--beta", type=float, default=DEFAULT_BETA)
    parser.add_argument("--c", type=int, default=32, help="Max records per user")
    parser.add_argument("--mu", type=float, default=0.0, help="Minimum unique users for key selection")
    parser.add_argument("--clamp", type=float, default=1.0, help="Per-record value clamp L_m")
    parser.add_argument("--triggers", type=int, default=100, help="Triggers per window")
    parser.add_argument("--window-days", type=float, default=1.0)
    parser.add_argument("--window-start", default="0", help="Epoch seconds or ISO-8601 instant")
    parser.add_argument("--lateness", type=float, help="Allowed lateness in seconds (default: unlimited)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--columns", nargs="*", help="Aggregation columns as name[:sum|count]")
    parser.add_argument("--key-fraction", type=float, default=0.5, help="Epsilon share for key selection")
    parser.add_argument("--key-delta-fraction", type=float, default=2.0 / 3.0, help="Delta share for key selection")
    parser.add_argument("--composition", choices=["naive", "advanced", "optimal"], default="advanced")
    parser.add_argument("--max-releases", type=int, help="Releases per key and window; a key stops releasing once its tree is full (default: triggers)")
    parser.add_argument("--checkpoint-every", type=int, default=10)
    parser.add_argument("--no-prediction", action="store_true", help="Scan every live key at every trigger")
    parser.add_argument("--results-db", help="Results database (default: $DPSQLP_RESULTS_DB)")
    parser.add_argument("--no-results", action="store_true", help="Do not write to the results database")


def _records(args):
    return ingest(
        Path(args.input),
        fmt=args.format,
        mapping=ColumnMapping.parse(args.mapping),
        on_error=args.on_error,
        count_users=args.count_users,
    )


def _results(args):
    return None if args.no_results else get_results_store(args.results_db)


def cmd_run(args) -> int:
    cfg = PipelineConfig.from_args(args)
    records = _records(args)
    print(f"=== Running {args.engine} on {len(records)} records ===")

    result = run_engine(args.engine, records, cfg)
    report = result.report.to_dict()
    if args.out:
        write_releases(Path(args.out), result.releases)
    if args.report:
        write_json(Path(args.report), report)

    results = _results(args)
    if results is not None:
        with results:
            results.store_record("run-report", report, run_id=result.report.run_id)

    print(f"Run id: {result.report.run_id}")
    print(f"Records admitted: {result.report.records_admitted} (dropped by bounding: {result.report.records_dropped_by_bounding})")
    print(f"Releases: {result.report.releases} over {result.report.keys_released} keys")
    return 0


def cmd_generate(args) -> int:
    window = WindowSpec(start=parse_instant(args.window_start), length=args.window_days * DAY_SECONDS)
    record_dist = ZipfMandelbrotDist(q=args.record_q, s=args.record_s, support=args.record_support)
    key_dist = ZipfMandelbrotDist(q=args.key_q, s=args.key_s, support=args.key_space)
    records = generate_synthetic(args.users, record_dist, key_dist, args.key_space, args.seed, window)
    count = write_records(Path(args.out), records)
    print("=== Synthetic Stream ===")
    print(f"Wrote {count} records for {args.users} users to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    window = WindowSpec(start=parse_instant(args.window_start), length=args.window_days * DAY_SECONDS)
    truth_records = ingest(Path(args.truth), count_users=args.count_users)
    truth = final_truth(ground_truth(truth_records, window, args.triggers))
    utility = score(args.engine, read_releases(Path(args.dp)), truth, args.triggers, args.column)

    print(f"=== Utility ({args.engine}) ===")
    for name, value in utility.to_dict().items():
        print(f"  {name}: {value}")
    if args.out:
        write_json(Path(args.out), {"engine": args.engine, **utility.to_dict()})
    return 0


def _stream_for(args, seed: Optional[int] = None):
    if args.input:
        return _records(args)
    cfg_window = WindowSpec(start=parse_instant(args.window_start), length=args.window_days * DAY_SECONDS)
    key_dist = ZipfMandelbrotDist(support=args.key_space, **KEY_DIST_PARAMS)
    return generate_synthetic(args.users, key_dist=key_dist, key_space=args.key_space, seed=args.seed if seed is None else seed, window=cfg_window)


def cmd_sweep(args) -> int:
    cfg = PipelineConfig.from_args(args)
    c_values = [int(c) for c in args.c_values.split(",") if c]
    results = _results(args)

    rows = []
    for repeat in range(args.repeats):
        repeat_seed = derive_seed(cfg.seed, "repeat", repeat)
        stream = _stream_for(args, repeat_seed)
        rows.extend(sweep_contribution_bound(stream, replace(cfg, seed=repeat_seed), c_values, args.engine, results))
    if results is not None:
        results.close()

    averaged = average_rows(rows)
    print(f"=== Contribution Bound Sweep ({args.engine}, {args.repeats} repeats) ===")
    for row in averaged:
        print(f"  C={row['C']:4} | keys={row['retained_keys']:9.1f} | l_inf={row['l_inf']:10.2f} | l1={row['l1']:12.2f} | l2={row['l2']:10.2f}")
    if args.csv:
        write_rows_csv(Path(args.csv), rows)
    return 0


def cmd_compare(args) -> int:
    cfg = PipelineConfig.from_args(args)
    results = _results(args)
    outcome = compare(_stream_for(args), cfg, results=results)
    if results is not None:
        results.close()

    print(f"=== Engine Comparison (T={cfg.T}, C={cfg.C}) ===")
    for engine, entry in outcome.items():
        u = entry["utility"]
        print(f"  {engine:9} | keys={u['retained_keys']:7} | l_inf={u['l_inf']:10.2f} | l1={u['l1']:12.2f} | l2={u['l2']:10.2f}")
    if args.out:
        write_json(Path(args.out), outcome)
    return 0


def cmd_inspect(args) -> int:
    with get_results_store(args.results_db) as db:
        if args.run:
            show_run(db, args.run)
            return 0
        if args.stats or not args.kind:
            show_stats(db)
        show_recent(db, args.recent, args.kind)
    return 0


def cmd_suggest_c(args) -> int:
    records = _records(args)
    C = suggest_contribution_bound(records, args.percentile, args.sample_fraction, args.seed)
    print("=== Contribution Bound Suggestion (not differentially private) ===")
    print(f"{args.percentile:g}th percentile of per-user record counts: C={C}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpsqlp", description="Streaming differentially private histograms")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    run_parser = subparsers.add_parser("run", help="Run an engine over a record file")
    _add_input_args(run_parser)
    _add_run_args(run_parser)
    run_parser.add_argument("--engine", choices=ENGINES, default="dpsqlp")
    run_parser.add_argument("--out", help="Releases output (.jsonl)")
    run_parser.add_argument("--report", help="Run report output (.json)")
    run_parser.set_defaults(handler=cmd_run)

    gen_parser = subparsers.add_parser("generate", help="Generate a synthetic stream")
    gen_parser.add_argument("--users", type=int, default=10_000)
    gen_parser.add_argument("--key-space", type=int, default=1_000)
    gen_parser.add_argument("--record-q", type=float, default=26.0)
    gen_parser.add_argument("--record-s", type=float, default=6.738)
    gen_parser.add_argument("--record-support", type=int, default=100_000)
    gen_parser.add_argument("--key-q", type=float, default=KEY_DIST_PARAMS["q"])
    gen_parser.add_argument("--key-s", type=float, default=KEY_DIST_PARAMS["s"])
    gen_parser.add_argument("--seed", type=int, default=0)
    gen_parser.add_argument("--window-start", default="0")
    gen_parser.add_argument("--window-days", type=float, default=1.0)
    gen_parser.add_argument("--out", required=True, help="Output file (.csv or .jsonl)")
    gen_parser.set_defaults(handler=cmd_generate)

    eval_parser = subparsers.add_parser("evaluate", help="Score releases against the raw stream")
    eval_parser.add_argument("--dp", required=True, help="Releases file (.jsonl)")
    eval_parser.add_argument("--truth", required=True, help="Raw records file the releases were computed from")
    eval_parser.add_argument("--engine", choices=ENGINES, default="dpsqlp")
    eval_parser.add_argument("--column", default="value")
    eval_parser.add_argument("--triggers", type=int, default=100)
    eval_parser.add_argument("--window-start", default="0")
    eval_parser.add_argument("--window-days", type=float, default=1.0)
    eval_parser.add_argument("--count-users", action="store_true")
    eval_parser.add_argument("--out", help="Utility report output (.json)")
    eval_parser.set_defaults(handler=cmd_evaluate)

    for name, handler, help_text in (
        ("sweep", cmd_sweep, "Sweep the contribution bound C"),
        ("compare", cmd_compare, "Compare DP-SQLP with both baselines"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        _add_input_args(sub, required=False)
        _add_run_args(sub)
        sub.add_argument("--users", type=int, default=10_000, help="Synthetic users when no --input")
        sub.add_argument("--key-space", type=int, default=1_000, help="Synthetic key space when no --input")
        sub.set_defaults(handler=handler)
        if name == "sweep":
            sub.add_argument("--c-values", default="1,2,5,10,17,25,32,50")
            sub.add_argument("--engine", choices=ENGINES, default="dpsqlp")
            sub.add_argument("--repeats", type=int, default=1, help="Independent seeds per C")
            sub.add_argument("--csv", help="Per-run rows as CSV")
        else:
            sub.add_argument("--out", help="Comparison output (.json)")

    inspect_parser = subparsers.add_parser("inspect", help="Query the results database")
    inspect_parser.add_argument("--results-db", help="Results database (default: $DPSQLP_RESULTS_DB)")
    inspect_parser.add_argument("--stats", action="store_true", help="Show record counts")
    inspect_parser.add_argument("--recent", type=int, default=10, help="Show recent records (default: 10)")
    inspect_parser.add_argument("--kind", help="Only records of this kind")
    inspect_parser.add_argument("--run", help="Show every record of one run id")
    inspect_parser.set_defaults(handler=cmd_inspect)

    suggest_parser = subparsers.add_parser("suggest-c", help="Percentile of per-user record counts (not DP)")
    _add_input_args(suggest_parser)
    suggest_parser.add_argument("--percentile", type=float, default=99.0)
    suggest_parser.add_argument("--sample-fraction", type=float, default=1.0)
    suggest_parser.add_argument("--seed", type=int, default=0)
    suggest_parser.set_defaults(handler=cmd_suggest_c)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    if not getattr(args, "handler", None):
        parser.print_help()
        return 0
    try:
        return args.handler(args)
    except DpSqlpError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
