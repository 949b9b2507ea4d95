"""
Command-line interface: run | simulate | eval | bench | config.

Exit codes: 0 success, 1 fatal input error, 2 configuration or scenario error.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import structlog

from app.config import EngineConfig, dump_config, dump_defaults, load_config, parse_override, settings, deep_merge
from app.core import AccidentDetectionError, ConfigError, ParseError, SpecError
from app.core.logging import setup_logging
from app.models.scenario import ScenarioSpec
from app.services import AccidentDetectionService
from app.services.evaluation import report_table
from app.services.scenario_sim import DEFAULT_SUITE_SEED, builtin_suite, load_spec, read_truth, write_truth
from app.utils import FileUtils, StreamUtils


logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONFIG = 2


def _common_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="JSON engine config file")
    parent.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override one config value (repeatable)",
    )
    parent.add_argument(
        "--strict-paper-mode",
        action="store_true",
        help="Evaluate the vertical overlap clause with the sum of centers",
    )
    parent.add_argument("--log-level", default=settings.log_level)
    parent.add_argument("--log-format", choices=["console", "json"], default=settings.log_format)
    return parent


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="accident-detect", description="Vehicle collision detection over detection streams")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", parents=[common], help="Detect accidents in a detection stream")
    run.add_argument("--input", help="Detection stream (JSON lines); stdin when omitted")
    run.add_argument("--output", help="Event output (JSON lines); stdout when omitted")
    run.add_argument("--trace", help="Write a per-frame trace (JSON lines) to this path")

    simulate = commands.add_parser("simulate", parents=[common], help="Generate synthetic scenarios")
    source = simulate.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="Scenario file (JSON)")
    source.add_argument("--builtin", help="Name of a builtin scenario")
    source.add_argument("--all", action="store_true", help="Every builtin scenario; --output must be a directory")
    simulate.add_argument("--output", help="Stream output path (or directory with --all); stdout when omitted")
    simulate.add_argument("--truth", help="Ground truth output path")
    simulate.add_argument("--seed", type=int, help="Override the scenario seed (base seed of the suite with --all)")

    evaluate = commands.add_parser("eval", parents=[common], help="Score events against ground truth")
    evaluate.add_argument("--truth", required=True, help="Ground truth file")
    given = evaluate.add_mutually_exclusive_group(required=True)
    given.add_argument("--events", help="Event file produced by 'run'")
    given.add_argument("--input", help="Detection stream to run first")
    evaluate.add_argument("--patterns", type=int, default=0, help="Scored pattern count for --events")
    evaluate.add_argument("--output", help="Write the report record (JSON) here")

    bench = commands.add_parser("bench", parents=[common], help="Run the builtin benchmark")
    bench.add_argument("--output", help="Directory for per-scenario event files")
    bench.add_argument("--report", help="Write the report record (JSON) here")
    bench.add_argument("--workers", type=int, default=settings.bench_workers)
    bench.add_argument("--seed", type=int, default=DEFAULT_SUITE_SEED, help="Base seed of the builtin suite")

    config = commands.add_parser("config", parents=[common], help="Show configuration")
    config.add_argument("--defaults", action="store_true", help="Embedded defaults, ignoring files and environment")
    return parser


def _engine_config(args: argparse.Namespace) -> EngineConfig:
    overrides: Dict[str, Any] = {}
    for assignment in args.overrides:
        overrides = deep_merge(overrides, parse_override(assignment))
    if args.strict_paper_mode:
        overrides = deep_merge(overrides, {"anomaly": {"strict_paper_mode": True}})
    return load_config(args.config, overrides)


def _cmd_run(args: argparse.Namespace, service: AccidentDetectionService) -> int:
    trace: Optional[List[Dict[str, Any]]] = [] if args.trace else None
    with StreamUtils.open_stream(args.input) as handle:
        result = service.process_stream(handle, name=args.input or "stdin", trace=trace)
    with StreamUtils.open_output(args.output) as out:
        out.write(StreamUtils.events_to_jsonl(result.events))
    if trace is not None:
        FileUtils.write_text(args.trace, StreamUtils.to_jsonl(trace))
    logger.info("run_finished", frames=result.frames, events=len(result.events), patterns=result.patterns)
    return EXIT_OK


def _builtin(name: str) -> ScenarioSpec:
    for spec in builtin_suite():
        if spec.name == name:
            return spec
    raise SpecError(f"no builtin scenario named {name!r}")


def _cmd_simulate(args: argparse.Namespace, service: AccidentDetectionService) -> int:
    if args.all:
        if not args.output:
            raise SpecError("--all needs --output pointing at a directory")
        FileUtils.create_directory(args.output)
        suite = service.scenarios(DEFAULT_SUITE_SEED if args.seed is None else args.seed)
        for spec in suite:
            generated = service.simulate(spec)
            stream_path = Path(args.output) / f"{spec.name}.jsonl"
            FileUtils.write_text(str(stream_path), "\n".join(generated.lines) + "\n")
            FileUtils.write_text(str(FileUtils.truth_path_for(str(stream_path))), write_truth(generated.truth))
        return EXIT_OK

    spec = load_spec(args.input) if args.input else _builtin(args.builtin)
    if args.seed is not None:
        spec = spec.model_copy(update={"seed": args.seed})
    generated = service.simulate(spec)
    with StreamUtils.open_output(args.output) as out:
        out.write("\n".join(generated.lines) + "\n")

    truth_path = args.truth
    if truth_path is None and args.output and args.output != "-":
        truth_path = str(FileUtils.truth_path_for(args.output))
    if truth_path:
        FileUtils.write_text(truth_path, write_truth(generated.truth))
    else:
        logger.warning("truth_not_written", scenario=spec.name, hint="pass --truth")
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace, service: AccidentDetectionService) -> int:
    with StreamUtils.open_input(args.truth) as handle:
        truth = read_truth(handle)

    if args.events:
        with StreamUtils.open_input(args.events) as handle:
            try:
                events = StreamUtils.read_events(handle)
            except (ValueError, KeyError, TypeError) as e:
                raise ParseError(f"unreadable event file {args.events}: {e}") from e
        patterns = args.patterns
        name = Path(args.events).stem
    else:
        with StreamUtils.open_stream(args.input) as handle:
            result = service.process_stream(handle, name=args.input)
        events, patterns = result.events, result.patterns
        name = Path(args.input).stem

    report = service.evaluate(events, truth, patterns, name=name)
    sys.stdout.write(report_table(report))
    record = json.dumps(report.to_record(), indent=2, sort_keys=True)
    if args.output:
        FileUtils.write_text(args.output, record + "\n")
    else:
        sys.stdout.write(record + "\n")
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace, service: AccidentDetectionService) -> int:
    service.workers = max(1, args.workers)
    report, events = service.bench(seed=args.seed)
    if args.output:
        FileUtils.create_directory(args.output)
        for name, scenario_events in events.items():
            FileUtils.write_text(str(Path(args.output) / f"{name}.events.jsonl"), StreamUtils.events_to_jsonl(scenario_events))
    sys.stdout.write(report_table(report))
    record = json.dumps(report.to_record(), indent=2, sort_keys=True)
    if args.report:
        FileUtils.write_text(args.report, record + "\n")
    else:
        sys.stdout.write(record + "\n")
    return EXIT_OK


def _cmd_config(args: argparse.Namespace, service: AccidentDetectionService) -> int:
    sys.stdout.write(dump_config(service.config) + "\n")
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "simulate": _cmd_simulate,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
    "config": _cmd_config,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, args.log_format, settings.log_file)

    try:
        if args.command == "config" and args.defaults:
            sys.stdout.write(dump_defaults() + "\n")
            return EXIT_OK
        service = AccidentDetectionService(_engine_config(args))
        return COMMANDS[args.command](args, service)
    except ParseError as e:
        logger.error("input_error", command=args.command, error=str(e))
        return EXIT_INPUT
    except (ConfigError, SpecError) as e:
        logger.error("configuration_error", command=args.command, error=str(e))
        return EXIT_CONFIG
    except OSError as e:
        logger.error("io_error", command=args.command, error=str(e))
        return EXIT_INPUT
    except AccidentDetectionError as e:
        logger.error("command_failed", command=args.command, error=str(e))
        return EXIT_INPUT
