"""Command line driver: ``fopid design|evaluate|simulate|report|compare``.

Exit codes: 0 when the selected controllers meet the design spec, 1 when
a controller was selected but misses the design spec, 2 when no controller
could be selected and 3 for bad input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from src.fopid.design import (
    DesignProblem,
    DesignReport,
    compare,
    design,
    evaluate,
    load_report_dicts,
    simulate,
)
from src.fopid.pole_placement import dominant_poles
from src.fopid.report_writers import (
    DesignReportJsonWriter,
    TablesJsonReportWriter,
    TablesReportWriter,
    report_tables,
    write_traces,
)
from src.fopid.simulator import SimulationError
from src.fopid.transfer_function import ControllerParams

EXIT_SPEC_MET = 0
EXIT_SPEC_NOT_MET = 1
EXIT_NO_CONVERGENCE = 2
EXIT_INPUT_ERROR = 3

LOGGING_FORMAT = (
    "[%(levelname)8s :%(filename)20s:%(lineno)4s - %(funcName)10s] %(message)s"
)


def params_from_values(values: Sequence[float]) -> ControllerParams:
    """``Kp Ti Td`` for a PID controller or ``Kp Ti Td lambda delta``."""
    if len(values) not in (3, 5):
        raise ValueError(
            f"--params takes 3 (Kp Ti Td) or 5 (Kp Ti Td lambda delta) values, "
            f"got {len(values)}"
        )
    return ControllerParams(*values)


def exit_code_for(reports: Sequence[DesignReport]) -> int:
    if any(report.selected is None for report in reports):
        return EXIT_NO_CONVERGENCE
    if all(report.spec_met for report in reports):
        return EXIT_SPEC_MET
    return EXIT_SPEC_NOT_MET


def load_problem(args: argparse.Namespace) -> DesignProblem:
    """Read the problem file and apply the command line overrides."""
    problem = DesignProblem.from_json(args.problem)

    optimizer_overrides = {
        "max_iters": args.max_iters,
        "population": args.population,
        "tolerance": args.tolerance,
    }
    optimizer = {
        **problem.optimizer,
        **{
            key: value
            for key, value in optimizer_overrides.items()
            if value is not None
        },
    }

    return problem.with_overrides(
        algorithm=getattr(args, "algorithm", None),
        mode=getattr(args, "mode", None),
        restarts=args.restarts,
        seed=args.seed,
        optimizer=optimizer,
    )


def run_design(args: argparse.Namespace) -> int:
    problem = load_problem(args)
    report = design(problem, show_progress=not args.quiet)

    text, _ = report_tables([report])
    print(text)

    if args.output is not None:
        with open(args.output, "w", encoding="utf-8") as out_f:
            out_f.write(report.to_json())
            out_f.write("\n")
        logging.info("Wrote design report to %s", args.output)

    if args.trace_dir is not None:
        args.trace_dir.mkdir(parents=True, exist_ok=True)
        write_traces(report, args.trace_dir)

    if args.response_csv is not None and report.selected is not None:
        simulate(
            problem.plant,
            report.selected,
            problem.simulation_config(report.damping),
            output_file=args.response_csv,
        )

    return exit_code_for([report])


def run_evaluate(args: argparse.Namespace) -> int:
    problem = DesignProblem.from_json(args.problem)
    params = params_from_values(args.params)

    poles = dominant_poles(problem.spec.damping())
    pole = poles.p2 if args.conjugate else poles.p1

    breakdown = evaluate(problem.plant, params, pole)
    print(json.dumps(breakdown.to_dict(), indent=2, sort_keys=True))
    return EXIT_SPEC_MET


def run_simulate(args: argparse.Namespace) -> int:
    problem = DesignProblem.from_json(args.problem)
    params = None if args.params is None else params_from_values(args.params)

    simulation_overrides = {
        "step_h": args.step_h,
        "horizon": args.horizon,
        "richardson": False if args.no_richardson else None,
    }
    problem = problem.with_overrides(
        simulation={
            **problem.simulation,
            **{k: v for k, v in simulation_overrides.items() if v is not None},
        }
    )

    _, metrics = simulate(
        problem.plant,
        params,
        problem.simulation_config(problem.spec.damping()),
        output_file=args.output,
    )
    metrics_dict = None if metrics is None else metrics.to_dict()
    print(json.dumps(metrics_dict, indent=2, sort_keys=True))
    return EXIT_SPEC_MET


def run_report(args: argparse.Namespace) -> int:
    reports = load_report_dicts(args.reports)
    text, tables = report_tables(reports)
    print(text)

    if args.json is not None:
        with open(args.json, "w", encoding="utf-8") as out_f:
            json.dump(tables, out_f, indent=2, sort_keys=True)
            out_f.write("\n")

    return EXIT_SPEC_MET


def run_compare(args: argparse.Namespace) -> int:
    problem = load_problem(args)
    reports = compare(problem, show_progress=not args.quiet)

    text, _ = report_tables(reports)
    print(text)

    if args.output_folder is not None:
        args.output_folder.mkdir(parents=True, exist_ok=True)
        for report_writer in (
            DesignReportJsonWriter(args.output_folder),
            TablesReportWriter(args.output_folder),
            TablesJsonReportWriter(args.output_folder),
        ):
            report_writer.write(reports)

    return exit_code_for(reports)


def add_optimizer_arguments(parser: argparse.ArgumentParser, with_choices: bool):
    if with_choices:
        parser.add_argument("--algorithm", choices=("pso", "de"))
        parser.add_argument("--mode", choices=("fractional", "integer"))
    parser.add_argument("--restarts", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--max-iters", type=int)
    parser.add_argument("--population", type=int)
    parser.add_argument("--tolerance", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fopid",
        description="Fractional-order PID design by dominant pole placement.",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")

    subparsers = parser.add_subparsers(dest="command", required=True)

    design_parser = subparsers.add_parser("design", help="design one controller")
    design_parser.add_argument("problem", type=Path, help="JSON problem file")
    add_optimizer_arguments(design_parser, with_choices=True)
    design_parser.add_argument("--output", type=Path, help="JSON design report")
    design_parser.add_argument("--trace-dir", type=Path)
    design_parser.add_argument("--response-csv", type=Path)
    design_parser.set_defaults(handler=run_design)

    evaluate_parser = subparsers.add_parser(
        "evaluate", help="residual of given controller parameters"
    )
    evaluate_parser.add_argument("problem", type=Path)
    evaluate_parser.add_argument("--params", type=float, nargs="+", required=True)
    evaluate_parser.add_argument(
        "--conjugate", action="store_true", help="evaluate at p2 instead of p1"
    )
    evaluate_parser.set_defaults(handler=run_evaluate)

    simulate_parser = subparsers.add_parser(
        "simulate", help="closed-loop (or open-loop) step response"
    )
    simulate_parser.add_argument("problem", type=Path)
    simulate_parser.add_argument(
        "--params", type=float, nargs="+", help="omit for the uncontrolled plant"
    )
    simulate_parser.add_argument("--output", type=Path, help="time,output CSV")
    simulate_parser.add_argument("--step-h", type=float)
    simulate_parser.add_argument("--horizon", type=float)
    simulate_parser.add_argument("--no-richardson", action="store_true")
    simulate_parser.set_defaults(handler=run_simulate)

    report_parser = subparsers.add_parser(
        "report", help="tables from saved design reports"
    )
    report_parser.add_argument("reports", type=Path, nargs="+")
    report_parser.add_argument("--json", type=Path)
    report_parser.set_defaults(handler=run_report)

    compare_parser = subparsers.add_parser(
        "compare", help="design with PSO and DE in both modes"
    )
    compare_parser.add_argument("problem", type=Path)
    add_optimizer_arguments(compare_parser, with_choices=False)
    compare_parser.add_argument("--output-folder", type=Path)
    compare_parser.set_defaults(handler=run_compare)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(format=LOGGING_FORMAT, level=level)

    try:
        return args.handler(args)
    except (ValueError, OSError, SimulationError) as error:
        print(f"fopid {args.command}: {error}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
