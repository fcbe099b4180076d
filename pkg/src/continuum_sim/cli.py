"""
Console entry point: `continuum-sim simulate ...` runs an architecture sweep and writes
the report; `continuum-sim compare ...` checks a written report against reference values.

Exit status: 0 on success, 1 when a reference comparison fails, 2 on any domain error.
"""
# stdlib
import argparse
import json
import logging
import os
import sys
from typing import List, Optional, Sequence

# Continuum absolute
from continuum_sim import __version__
from continuum_sim.exceptions.exceptions import (
    DomainError,
    EmptyArchitectureSet,
    EmptyWindow,
    InsufficientSamples,
    InvalidScenario,
    MissingReferenceMetric,
    NonPositiveRate,
    ReportWriteError,
    UtilizationOutOfRange,
)
from continuum_sim.model.scenario import list_presets
from continuum_sim.model.types import ALL_ARCHITECTURES, Architecture
from continuum_sim.report.compare import DEFAULT_REFERENCE, compare_to_reference
from continuum_sim.report.emit import FORMATS, emit_report
from continuum_sim.report.experiment import DEFAULT_RUNS, DEFAULT_SEED, run_experiment

log = logging.getLogger(__name__)

SEED_ENV_VAR = "CONTINUUM_SIM_SEED"
EXIT_OK = 0
EXIT_COMPARISON_FAILED = 1
EXIT_DOMAIN_ERROR = 2

DOMAIN_ERRORS = (
    InvalidScenario,
    NonPositiveRate,
    EmptyWindow,
    UtilizationOutOfRange,
    InsufficientSamples,
    DomainError,
    EmptyArchitectureSet,
    MissingReferenceMetric,
    ReportWriteError,
    OSError,
    ValueError,
)


def parse_architectures(value: str) -> List[Architecture]:
    if value == "all":
        return list(ALL_ARCHITECTURES)
    names = [v.strip() for v in value.split(",") if v.strip()]
    try:
        return [Architecture.from_short_name(name) for name in names]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"unknown architecture '{e}'; use cloud, gateway, dfc or all")


def parse_formats(value: str) -> List[str]:
    formats = [v.strip() for v in value.split(",") if v.strip()]
    unknown = [f for f in formats if f not in FORMATS]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown format(s) {unknown}; use {','.join(FORMATS)}")
    return formats


def parse_scenarios(values: Sequence[str]) -> List[str]:
    scenarios: List[str] = []
    for value in values:
        for item in value.split(","):
            item = item.strip()
            if item == "all":
                scenarios.extend(list_presets())
            elif item:
                scenarios.append(item)
    return list(dict.fromkeys(scenarios))


def resolve_seed(seed: Optional[int]) -> int:
    """CLI flag first, then the environment, then the built-in default."""
    if seed is not None:
        return seed
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{SEED_ENV_VAR}={raw!r} is not an integer seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="continuum-sim",
        description="Compare Cloud-Centric, Gateway-Edge and DFC-AI architectures by discrete-event simulation.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Ten seeded runs of every architecture on the drone preset
  %(prog)s simulate --scenario drone_fleet --arch all --runs 10 --output out/

  # A one-hour sweep of all presets with the internet down for the whole horizon
  %(prog)s simulate --scenario all --duration-s 3600 --outage down --output out-down/

  # Check a written report against the shipped reference tables
  %(prog)s compare --report out/
""",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Log debug messages")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Log warnings only, no progress bar")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Run an architecture sweep and write the report")
    simulate.add_argument(
        "--scenario",
        action="append",
        required=True,
        help="Preset stem or name, scenario JSON path, a comma-separated list, or 'all'. May repeat.",
    )
    simulate.add_argument("--arch", type=parse_architectures, default="all", help="cloud, gateway, dfc, a list or all")
    simulate.add_argument("--runs", type=int, default=DEFAULT_RUNS, metavar="N", help=f"Runs per architecture (default: {DEFAULT_RUNS})")
    simulate.add_argument("--seed", type=int, default=None, help=f"Base seed (default: ${SEED_ENV_VAR} or {DEFAULT_SEED})")
    simulate.add_argument("--duration-s", type=float, default=None, help="Override the simulated horizon in seconds")
    simulate.add_argument("--outage", default=None, help="none, unstable, down or an outage schedule JSON file")
    simulate.add_argument("--output", default=".", help="Directory the report files are written to")
    simulate.add_argument("--format", type=parse_formats, default=list(FORMATS), help="Comma-separated md,csv,json")
    simulate.add_argument("--parallel", type=int, default=1, metavar="N", help="Worker processes (default: 1)")
    simulate.add_argument("--trace", default=None, metavar="PATH", help="Write the per-task CSV of the base-seed run")
    simulate.add_argument("--dump-workload", default=None, metavar="PATH", help="Write the base-seed task stream as CSV")
    simulate.add_argument(
        "--reference",
        default=None,
        help="Also compare the report against this reference file and exit 1 on a failed gating cell",
    )

    compare = commands.add_parser("compare", help="Check a report against reference values")
    compare.add_argument("--report", required=True, help="report.json or the directory holding it")
    compare.add_argument("--reference", default=str(DEFAULT_REFERENCE), help="Reference values JSON file")
    compare.add_argument("--no-color", action="store_true", help="Plain pass/fail output")
    return parser


def setup_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)


def _simulate(args) -> int:
    report = run_experiment(
        parse_scenarios(args.scenario),
        args.arch,
        runs=args.runs,
        base_seed=resolve_seed(args.seed),
        duration_s=args.duration_s,
        outage=args.outage,
        parallel=max(1, args.parallel),
        progress=not args.quiet,
        trace_path=args.trace,
        workload_path=args.dump_workload,
    )
    written = emit_report(report, args.format, args.output)
    for fmt, path in written.items():
        print(f"{fmt}: {path}")
    if args.reference is not None:
        result = compare_to_reference(report, args.reference)
        print(result.format())
        return EXIT_OK if result.passed else EXIT_COMPARISON_FAILED
    return EXIT_OK


def _compare(args) -> int:
    result = compare_to_reference(args.report, args.reference)
    print(result.format(color=not args.no_color))
    return EXIT_OK if result.passed else EXIT_COMPARISON_FAILED


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.quiet)
    try:
        if args.command == "simulate":
            return _simulate(args)
        return _compare(args)
    except json.JSONDecodeError as e:
        log.error(f"Malformed JSON: {e}")
    except DOMAIN_ERRORS as e:
        log.error(str(e))
    return EXIT_DOMAIN_ERROR


def run():
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    run()
