"""Batch command-line front end.

Parses a config file and a subcommand, runs the experiment, writes CSVs to
the output directory, and prints a summary table (one line per group:
kind / n / temperature / pattern / mean success).

Exit codes: 0 success, 2 config error, 3 capability-unsupported,
4 io-failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import RunConfig, load_config, make_spec
from .engine import format_trace
from .errors import CapabilityError, InvalidConfigError
from .harness import (CoverageReport, RowOrderReport, SubarrayMapReport,
                      SuccessRateReport, run_experiment, write_csv)
from .pudops import build_copy_trace, build_nary_trace
from .topology import TopologyConfig, build_topology
from .variation import PROFILE_NAMES, get_profile, override_profile

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPABILITY = 3
EXIT_IO = 4

_SWEEP_KINDS = {
    "temperature": "temperature_sweep",
    "regions": "region_heatmap",
    "patterns": "pattern_compare",
    "ones": "logic1_count",
}
_REVENG_KINDS = {
    "subarrays": "reveng_subarrays",
    "order": "reveng_roworder",
}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="FILE",
                     help="TOML config file (see docs/MODEL.md)")
    sub.add_argument("--profile", choices=PROFILE_NAMES,
                     help="chip profile (default vendorA-like)")
    sub.add_argument("--seed", type=lambda s: int(s, 0),
                     help="RNG seed; overrides FCDRAM_SEED and the config")
    sub.add_argument("--trials", type=int, help="Monte Carlo trials per cell")
    sub.add_argument("--workers", type=int,
                     help="parallel worker processes (default 1)")
    sub.add_argument("--out", metavar="DIR",
                     help="output directory for CSVs (default .)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pudsim",
        description="In-DRAM computation reliability simulator")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("coverage",
                        help="row-pair activation pattern coverage")
    _add_common(p)

    p = subs.add_parser("not", help="NOT success vs destination row count")
    _add_common(p)
    p.add_argument("--dests", type=int, nargs="+", metavar="D",
                   help="destination row counts (default 1 2 4 8 16 32)")

    p = subs.add_parser("logic", help="many-input AND/NAND/OR/NOR success")
    _add_common(p)
    p.add_argument("--n", type=int, nargs="+", metavar="N",
                   help="input counts (default 2 4 8 16)")

    p = subs.add_parser("sweep", help="secondary sweeps")
    p.add_argument("axis", choices=sorted(_SWEEP_KINDS),
                   help="temperature: success vs temperature; regions: "
                        "success per (src, dst) region; patterns: all1s0s "
                        "vs random data; ones: AND success vs count of 1s")
    _add_common(p)

    p = subs.add_parser("reveng", help="recover hidden bank geometry")
    p.add_argument("target", choices=sorted(_REVENG_KINDS),
                   help="subarrays: row -> subarray map; order: physical "
                        "row order inside one subarray")
    _add_common(p)
    p.add_argument("--subarray", type=int,
                   help="subarray to probe (order target only)")

    p = subs.add_parser("dry-trace",
                        help="print a command trace without executing it")
    _add_common(p)
    p.add_argument("--op", choices=("not", "nary"), default="not")
    p.add_argument("--src", type=int, default=0, help="source row (global)")
    p.add_argument("--dst", type=int, default=1,
                   help="destination / last row (global)")

    p = subs.add_parser("profiles", help="list built-in chip profiles")

    return parser


def _experiment_flags(args) -> dict:
    flags = {}
    if getattr(args, "n", None) is not None:
        flags["n_values"] = tuple(args.n)
    if getattr(args, "dests", None) is not None:
        flags["n_values"] = tuple(args.dests)
    if getattr(args, "subarray", None) is not None:
        flags["subarray"] = args.subarray
    return flags


def _print_success_table(report: SuccessRateReport) -> None:
    rows = report.summary()
    print(f"experiment: {report.experiment}  trials: {report.trials}")
    header = f"{'kind':<6} {'n':>3} {'temp':>5} {'pattern':<8} " \
             f"{'cells':>7} {'mean':>9}"
    print(header)
    for r in rows:
        mean = f"{r['mean']:.6f}"
        line = f"{r['kind']:<6} {r['n']:>3} {r['temperature']:>5g} " \
               f"{r['pattern']:<8} {r['cells']:>7} {mean:>9}"
        if r["reason"]:
            line += f"  [blocked: {r['reason']}]"
        print(line)


def _print_report(report) -> None:
    if isinstance(report, SuccessRateReport):
        _print_success_table(report)
    elif isinstance(report, CoverageReport):
        print(f"{'pattern':<10} fraction")
        for label, frac in sorted(report.fractions.items()):
            print(f"{label:<10} {frac:.6f}")
    elif isinstance(report, SubarrayMapReport):
        n_subs = len(set(report.assignment))
        print(f"recovered {n_subs} subarrays over "
              f"{len(report.assignment)} rows")
    elif isinstance(report, RowOrderReport):
        print(f"subarray {report.subarray}: recovered physical order of "
              f"{len(report.order)} rows")


def _csv_name(kind: str) -> str:
    return kind + ".csv"


def _run(kind: str, args) -> int:
    file_cfg = load_config(args.config) if args.config else {}
    out = args.out if args.out is not None \
        else file_cfg.get("run", {}).get("out", ".")
    rc = RunConfig(subcommand=kind,
                   config_path=Path(args.config) if args.config else None,
                   out_dir=Path(out), seed=args.seed, workers=args.workers)
    spec = make_spec(kind, file_cfg, profile=args.profile, seed=rc.seed,
                     trials=args.trials, workers=rc.workers,
                     **_experiment_flags(args))
    report = run_experiment(spec)

    try:
        rc.out_dir.mkdir(parents=True, exist_ok=True)
        path = rc.out_dir / _csv_name(kind)
        write_csv(report, path)
    except OSError as exc:
        print(f"error: cannot write results: {exc}", file=sys.stderr)
        return EXIT_IO

    _print_report(report)
    print(f"wrote {path}")

    if isinstance(report, SuccessRateReport) and \
            all(g.reason for g in report.groups):
        print("error: no group is supported on this profile",
              file=sys.stderr)
        return EXIT_CAPABILITY
    return EXIT_OK


def _dry_trace(args) -> int:
    file_cfg = load_config(args.config) if args.config else {}
    profile = get_profile(args.profile or
                          file_cfg.get("run", {}).get("profile",
                                                      "vendorA-like"))
    overrides = {k: file_cfg[k] for k in ("noise", "timing")
                 if k in file_cfg}
    if overrides:
        profile = override_profile(profile, **overrides)
    topology = build_topology(TopologyConfig(**file_cfg.get("topology", {})))
    for row in (args.src, args.dst):
        if not 0 <= row < topology.num_rows:
            raise InvalidConfigError(f"row {row} outside the bank")
    if args.op == "not":
        trace = build_copy_trace(profile.timing, args.src, args.dst)
    else:
        trace = build_nary_trace(profile.timing, args.src, args.dst)
    sys.stdout.write(format_trace(trace, topology.rows_per_subarray))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "profiles":
            for name in PROFILE_NAMES:
                print(name)
            return EXIT_OK
        if args.command == "dry-trace":
            return _dry_trace(args)
        if args.command == "sweep":
            return _run(_SWEEP_KINDS[args.axis], args)
        if args.command == "reveng":
            return _run(_REVENG_KINDS[args.target], args)
        kind = {"coverage": "coverage", "not": "not_sweep",
                "logic": "logic_sweep"}[args.command]
        return _run(kind, args)
    except InvalidConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
