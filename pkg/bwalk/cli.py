"""
bwalk command line

Sub-commands:
- sample            sample a body given as a JSON descriptor file
- experiment        run a built-in scenario
- list-bodies       show the supported body descriptor types
- list-experiments  show the built-in scenarios and their defaults

Exit codes: 0 all checks passed, 1 a check failed (or the run broke down),
2 usage or configuration error.
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, Optional, Sequence, get_args

from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from bwalk.core.config import get_settings
from bwalk.core.exceptions import (
    BilliardWalkError,
    BodyBuildError,
    InvalidConfigError,
    InvalidDimensionError,
    PreconditionError,
    ReportWriteError,
    UnsupportedBodyError,
)
from bwalk.core.logging_config import setup_logging
from bwalk.geometry.builder import load_descriptor
from bwalk.schemas import bodies
from bwalk.schemas.experiments import Scenario, ScenarioName
from bwalk.schemas.sampling import Budget, RunReport, SamplerKind
from bwalk.services.experiments import get_experiment_service
from bwalk.services.export_service import ReportFormat, get_export_service

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

_USAGE_ERRORS = (
    BodyBuildError,
    InvalidConfigError,
    InvalidDimensionError,
    PreconditionError,
    ReportWriteError,
    UnsupportedBodyError,
)

console = Console()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bwalk", description="Billiard Walk and Hit-and-Run samplers")
    commands = parser.add_subparsers(dest="command", required=True)

    sample = commands.add_parser("sample", help="Sample a body from a JSON descriptor")
    sample.add_argument("--body", required=True, help="Path to a body descriptor JSON file")
    sample.add_argument("--sampler", choices=[k.value for k in SamplerKind], default="bw")
    sample.add_argument("--tau", type=float, help="Mean trajectory length (default: diameter)")
    sample.add_argument("--max-reflections", type=int, help="Reflection cap R (default: 10n)")
    sample.add_argument("--length-redraw-after", type=int,
                        help="Capped restarts before the length is redrawn (0 keeps it)")
    budget = sample.add_mutually_exclusive_group(required=True)
    budget.add_argument("--samples", type=int, help="Number of samples")
    budget.add_argument("--bo-budget", type=int, help="Boundary Oracle call budget")
    sample.add_argument("--seed", type=int, help="64-bit seed")
    sample.add_argument("--precondition", choices=["dikin"], help="Round the polytope first")
    sample.add_argument("--start", type=json.loads, help="Start point as a JSON list")
    sample.add_argument("--chains", type=int, default=1, help="Independent chains")
    sample.add_argument("--out", help="Output path")
    sample.add_argument("--format", choices=[f.value for f in ReportFormat], default="json")
    sample.add_argument("--no-samples", action="store_true", help="Drop samples from the report")

    experiment = commands.add_parser("experiment", help="Run a built-in scenario")
    experiment.add_argument("name", choices=[n.value for n in ScenarioName])
    experiment.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                            help="Scenario parameter; VALUE is parsed as JSON when possible")
    experiment.add_argument("--expect", action="append", default=[], metavar="METRIC=JSON",
                            help="Expected value override, e.g. ratio='{\"value\": 6}'")
    experiment.add_argument("--seed", type=int, help="64-bit seed")
    experiment.add_argument("--out", help="Output path")
    experiment.add_argument("--format", choices=[f.value for f in ReportFormat], default="json")
    experiment.add_argument("--retain-samples", action="store_true",
                            help="Keep chain samples in the report")

    commands.add_parser("list-bodies", help="List body descriptor types")
    commands.add_parser("list-experiments", help="List built-in scenarios")
    return parser


def parse_assignments(items: Sequence[str]) -> Dict[str, Any]:
    """KEY=VALUE pairs; values are JSON when they parse, strings otherwise"""
    parsed: Dict[str, Any] = {}
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise InvalidConfigError(f"expected KEY=VALUE, got {item!r}")
        try:
            parsed[key] = json.loads(raw)
        except json.JSONDecodeError:
            parsed[key] = raw
    return parsed


def _print_report(report: RunReport) -> None:
    summary = Table(title="Run summary")
    summary.add_column("Quantity", style="cyan", no_wrap=True)
    summary.add_column("Value", style="green")
    summary.add_row("samples", str(report.n_samples))
    summary.add_row("BO calls", str(report.bo_calls))
    if report.length_redraws:
        summary.add_row("length redraws", str(report.length_redraws))
    summary.add_row("wall time [s]", f"{report.wall_time:.2f}")
    for name, value in report.metrics.items():
        summary.add_row(name, f"{value:.6g}" if isinstance(value, float) else str(value))
    console.print(summary)

    if report.checks:
        checks = Table(title="Checks")
        checks.add_column("Check", style="cyan", no_wrap=True)
        checks.add_column("Observed", style="magenta")
        checks.add_column("Condition")
        checks.add_column("Status")
        for check in report.checks:
            observed = "-" if check.observed is None else f"{check.observed:.6g}"
            status = "[green]pass[/green]" if check.passed else "[red]FAIL[/red]"
            checks.add_row(check.name, observed, check.detail or "", status)
        console.print(checks)


def _emit(report: RunReport, out: Optional[str], format: str) -> None:
    if out:
        for path in get_export_service().emit_report(report, format, out):
            console.print(f"Wrote [bold]{path}[/bold]")


def _cmd_sample(args: argparse.Namespace) -> int:
    descriptor = load_descriptor(args.body)
    try:
        budget = Budget(samples=args.samples, bo_calls=args.bo_budget)
    except ValidationError as e:
        raise InvalidConfigError(f"invalid budget: {e}") from e
    if args.chains < 1:
        raise InvalidConfigError("--chains must be at least 1")
    report = get_experiment_service().run_sampling(
        descriptor, args.sampler, budget, tau=args.tau, max_reflections=args.max_reflections,
        seed=args.seed, precondition=args.precondition, start=args.start, chains=args.chains,
        retain_samples=not args.no_samples, length_redraw_after=args.length_redraw_after)
    _print_report(report)
    _emit(report, args.out, args.format)
    return EXIT_OK


def _cmd_experiment(args: argparse.Namespace) -> int:
    try:
        scenario = Scenario(
            name=args.name,
            parameters=parse_assignments(args.param),
            seed=args.seed,
            expected=parse_assignments(args.expect) or None,
            retain_samples=args.retain_samples,
        )
    except ValidationError as e:
        raise InvalidConfigError(f"invalid scenario: {e}") from e
    report = get_experiment_service().run_scenario(scenario)
    _print_report(report)
    _emit(report, args.out, args.format)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def _cmd_list_bodies(args: argparse.Namespace) -> int:
    table = Table(title="Body descriptors")
    table.add_column("type", style="cyan")
    table.add_column("description", style="green")
    for model in get_args(get_args(bodies.BodyDescriptor)[0]):
        table.add_row(model.model_fields["type"].default, (model.__doc__ or "").strip())
    console.print(table)
    return EXIT_OK


def _cmd_list_experiments(args: argparse.Namespace) -> int:
    table = Table(title="Experiments")
    table.add_column("name", style="cyan")
    table.add_column("description", style="green")
    table.add_column("defaults")
    for experiment in get_experiment_service().list_experiments():
        table.add_row(experiment["name"], experiment["description"],
                      json.dumps(experiment["defaults"]))
    console.print(table)
    return EXIT_OK


_COMMANDS = {
    "sample": _cmd_sample,
    "experiment": _cmd_experiment,
    "list-bodies": _cmd_list_bodies,
    "list-experiments": _cmd_list_experiments,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        setup_logging(get_settings())
        return _COMMANDS[args.command](args)
    except ValidationError as e:
        console.print(f"[red]Configuration error:[/red] {e}")
        return EXIT_USAGE
    except _USAGE_ERRORS as e:
        console.print(f"[red]{type(e).__name__}:[/red] {e}")
        return EXIT_USAGE
    except BilliardWalkError as e:
        logger.error(f"Run failed: {e}")
        console.print(f"[red]{type(e).__name__}:[/red] {e}")
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
