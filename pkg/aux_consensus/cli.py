"""
Command-line interface.

Usage:
    python -m aux_consensus run [options]
    python -m aux_consensus compare [options]
    python -m aux_consensus replay TRACE [TRACE ...] [options]

Options (run / compare):
    --config PATH          JSON config file; flags override it
    --n N[,N...]           process counts (default grid: 4,7,10)
    --grid fast|large      preset n grid when --n is absent
    --t T                  faulty bound (default floor((n-1)/3) per n)
    --instances K          measured instances per n
    --warmup K             warmup instances per n (not measured)
    --seed S               master seed
    --combine-messages     piggyback coin shares on the next round's vote
    --include-proofs       attach validity proofs (--no-include-proofs: on request)
    --lazy-stop            keep the decision proof until someone lags behind
    --adversary KIND       fifo | random | heuristic
    --faults SPEC          e.g. "3:crash@0,2:equivocate" or "silent"
    --coin MODE            override | real
    --format FORMAT        json | csv | text
    --out PATH             write the report to PATH instead of stdout

Exit status is 0 for a green report, 1 when a property was violated and 2
for configuration or input errors.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from dataclasses import replace
from typing import Any, Optional, Sequence

from .const import (
    ADVERSARIES,
    COIN_MODES,
    CONF_ADVERSARY,
    CONF_COIN,
    CONF_COMBINE_MESSAGES,
    CONF_EVENT_LOG_PATH,
    CONF_FAIRNESS_FACTOR,
    CONF_FAULTS,
    CONF_INCLUDE_PROOFS,
    CONF_INSTANCES,
    CONF_LAZY_STOP,
    CONF_LOG_LEVEL,
    CONF_MAX_WORKERS,
    CONF_N,
    CONF_OUTPUT_FORMAT,
    CONF_OUTPUT_PATH,
    CONF_PROPOSALS,
    CONF_SEED,
    CONF_STEP_CAP,
    CONF_T,
    CONF_TRACE_DIR,
    CONF_WARMUP,
    FORMAT_JSON,
    FORMAT_TEXT,
    GRID_FAST,
    GRID_LARGE,
    OUTPUT_FORMATS,
)
from .core.config import ExperimentConfig
from .core.exceptions import ConfigError, ConsensusError, ReplayDivergence
from .core.state import ProtocolMode
from .sim.properties import check_all
from .sim.simulator import InstanceConfig, replay
from .sim.trace import Trace
from .stats.analyzer import ReportAnalyzer
from .stats.manager import ExperimentRunner
from .stats.metrics import InstanceRow
from .utils.validators import LOG_LEVELS

_LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2

_GRIDS = {"fast": GRID_FAST, "large": GRID_LARGE}

# argparse dest -> config key
_FLAG_KEYS = {
    "n": CONF_N,
    "t": CONF_T,
    "instances": CONF_INSTANCES,
    "warmup": CONF_WARMUP,
    "seed": CONF_SEED,
    "proposals": CONF_PROPOSALS,
    "combine_messages": CONF_COMBINE_MESSAGES,
    "include_proofs": CONF_INCLUDE_PROOFS,
    "lazy_stop": CONF_LAZY_STOP,
    "adversary": CONF_ADVERSARY,
    "fairness_factor": CONF_FAIRNESS_FACTOR,
    "faults": CONF_FAULTS,
    "coin": CONF_COIN,
    "step_cap": CONF_STEP_CAP,
    "format": CONF_OUTPUT_FORMAT,
    "out": CONF_OUTPUT_PATH,
    "trace_dir": CONF_TRACE_DIR,
    "event_log": CONF_EVENT_LOG_PATH,
    "log_level": CONF_LOG_LEVEL,
    "max_workers": CONF_MAX_WORKERS,
}


def _add_mode_flags(parser: argparse.ArgumentParser) -> None:
    toggle = argparse.BooleanOptionalAction
    parser.add_argument("--combine-messages", action=toggle, default=None)
    parser.add_argument("--include-proofs", action=toggle, default=None)
    parser.add_argument("--lazy-stop", action=toggle, default=None)


def _add_common(
    parser: argparse.ArgumentParser, formats: Sequence[str] = OUTPUT_FORMATS
) -> None:
    parser.add_argument("--format", choices=list(formats), default=None)
    parser.add_argument("--out", default=None, help="Write output to this file")
    parser.add_argument("--log-level", choices=LOG_LEVELS, default=None)


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--n", default=None, help="Process counts, e.g. 4,7,10")
    parser.add_argument("--grid", choices=sorted(_GRIDS), default=None)
    parser.add_argument("--t", type=int, default=None)
    parser.add_argument("--instances", type=int, default=None)
    parser.add_argument("--warmup", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--proposals", default=None, help='"random" or bits like 0101')
    _add_mode_flags(parser)
    parser.add_argument("--adversary", choices=ADVERSARIES, default=None)
    parser.add_argument("--fairness-factor", type=int, default=None)
    parser.add_argument("--faults", default=None)
    parser.add_argument("--coin", choices=COIN_MODES, default=None)
    parser.add_argument("--step-cap", type=int, default=None)
    parser.add_argument("--trace-dir", default=None)
    parser.add_argument("--event-log", default=None)
    parser.add_argument("--max-workers", type=int, default=None)
    _add_common(parser)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aux_consensus",
        description="Simulate randomized binary Byzantine consensus with signed votes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_experiment_flags(sub.add_parser("run", help="Run an experiment grid"))
    _add_experiment_flags(
        sub.add_parser("compare", help="Pair base and combined modes over identical seeds")
    )

    replay_parser = sub.add_parser("replay", help="Re-execute stored traces")
    replay_parser.add_argument("traces", nargs="+", help="Trace files")
    _add_mode_flags(replay_parser)
    _add_common(replay_parser, formats=(FORMAT_JSON, FORMAT_TEXT))
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """File (if any), then flags on top."""
    base = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides: dict[str, Any] = {
        key: getattr(args, dest, None) for dest, key in _FLAG_KEYS.items()
    }
    if overrides[CONF_N] is None and args.grid:
        overrides[CONF_N] = list(_GRIDS[args.grid])
    return base.merge_overrides(overrides).ensure_valid()


def _configure_logging(level: Optional[str]) -> None:
    name = (level or "error").lower()
    if name == "none":
        logging.disable(logging.CRITICAL)
        return
    numeric = logging.DEBUG if name == "trace" else getattr(logging, name.upper())
    logging.basicConfig(
        level=numeric, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )


def _emit(output: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(output)
    else:
        print(f"Results exported to {path}", file=sys.stderr)


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args)
    report = asyncio.run(ExperimentRunner(config).run_experiment())
    output = ReportAnalyzer().report_emit(
        report, config.output_format, config.output_path
    )
    _emit(output, config.output_path)
    return EXIT_OK if report.green else EXIT_VIOLATION


def cmd_compare(args: argparse.Namespace) -> int:
    config = load_config(args)
    diff = asyncio.run(ExperimentRunner(config).compare_modes(strict=False))
    output = ReportAnalyzer().report_emit(diff, config.output_format, config.output_path)
    _emit(output, config.output_path)
    return EXIT_OK if diff.green else EXIT_VIOLATION


def _expected_config(trace: Trace, args: argparse.Namespace) -> Optional[InstanceConfig]:
    flags = (args.combine_messages, args.include_proofs, args.lazy_stop)
    if all(flag is None for flag in flags):
        return None
    recorded = InstanceConfig.from_dict(trace.header)
    mode = recorded.mode
    return replace(
        recorded,
        mode=ProtocolMode(
            combine_messages=(
                mode.combine_messages if args.combine_messages is None else args.combine_messages
            ),
            include_proofs=(
                mode.include_proofs if args.include_proofs is None else args.include_proofs
            ),
            lazy_stop=mode.lazy_stop if args.lazy_stop is None else args.lazy_stop,
        ),
    )


def cmd_replay(args: argparse.Namespace) -> int:
    fmt = args.format or FORMAT_TEXT
    rows: list[dict[str, Any]] = []
    status = EXIT_OK
    for path in args.traces:
        trace = Trace.read(path)
        try:
            result = replay(trace, _expected_config(trace, args))
        except ReplayDivergence as err:
            print(f"{path}: {err}", file=sys.stderr)
            status = EXIT_VIOLATION
            continue
        violations = check_all(result)
        if violations:
            status = EXIT_VIOLATION
        row = InstanceRow.from_result(result, violations).to_dict()
        row["trace"] = str(path)
        rows.append(row)

    if fmt == FORMAT_TEXT:
        output = "".join(
            f"{row['trace']}: n={row['n']} {row['mode']} #{row['index']} "
            f"decided={row['decided_value']} round={row['decision_round']} "
            f"violations={len(row['violations'])}\n"
            for row in rows
        )
    else:
        output = json.dumps(rows, indent=2, ensure_ascii=False) + "\n"

    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(output)
    _emit(output, args.out)
    return status


_COMMANDS = {"run": cmd_run, "compare": cmd_compare, "replay": cmd_replay}


def main(argv: Optional[Sequence[str]] = None) -> None:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.log_level)

    try:
        status = _COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"Error: {err}", file=sys.stderr)
        sys.exit(EXIT_USAGE)
    except (ConsensusError, OSError) as err:
        print(f"Error: {err}", file=sys.stderr)
        sys.exit(EXIT_USAGE)
    sys.exit(status)


if __name__ == "__main__":
    main()
