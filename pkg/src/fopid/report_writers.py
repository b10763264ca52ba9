from __future__ import annotations

import json
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import pandas as pd

from src.fopid.design import DesignReport

ReportLike = Union[DesignReport, Dict[str, Any]]

DASH = "-"
PARAMETER_NAMES = ("kp", "ti", "td", "lam", "delta")
PARAMETER_HEADERS = ("Kp", "Ti", "Td", "lambda", "delta")


def as_report_dict(report: ReportLike) -> Dict[str, Any]:
    if isinstance(report, DesignReport):
        return report.to_dict()
    return report


def row_label(report: Dict[str, Any]) -> Dict[str, str]:
    return {"Order": report["mode"], "Algorithm": report["algorithm"].upper()}


def parameter_rows(reports: Sequence[ReportLike]) -> List[Dict[str, str]]:
    rows = []
    for report in map(as_report_dict, reports):
        selected = report["selected"]
        row = row_label(report)
        for name, header in zip(PARAMETER_NAMES, PARAMETER_HEADERS):
            row[header] = DASH if selected is None else f"{selected[name]:.2f}"
        rows.append(row)
    return rows


def controller_rows(reports: Sequence[ReportLike]) -> List[Dict[str, str]]:
    rows = []
    for report in map(as_report_dict, reports):
        selected = report["selected"]
        row = row_label(report)
        if selected is None:
            row["Gc(s)"] = DASH
        else:
            row["Gc(s)"] = (
                f"{selected['kp']:.2f} + {selected['ti']:.2f} s^-{selected['lam']:.2f}"
                f" + {selected['td']:.2f} s^{selected['delta']:.2f}"
            )
        rows.append(row)
    return rows


def metric_rows(reports: Sequence[ReportLike]) -> List[Dict[str, str]]:
    rows = []
    for report in map(as_report_dict, reports):
        metrics = report["metrics"]
        row = row_label(report)
        if metrics is None:
            row.update({"Mp (%)": DASH, "t_rise (s)": DASH, "Spec met": DASH})
        else:
            rise_time = metrics["rise_time"]
            row["Mp (%)"] = f"{100 * metrics['overshoot_fraction']:.1f}"
            row["t_rise (s)"] = DASH if rise_time is None else f"{rise_time:.3f}"
            row["Spec met"] = "yes" if report["spec_met"] else "no"
        row["Note"] = report.get("diagnostic", "")
        rows.append(row)
    return rows


def report_tables(reports: Sequence[ReportLike]) -> Tuple[str, Dict[str, Any]]:
    """Render the parameter, controller and metric tables of design reports.

    Parameters
    ----------
    reports : Sequence
        ``DesignReport`` objects or their ``to_dict`` form, one table row each.

    Returns
    -------
    Tuple[str, Dict[str, Any]]
        The tables as plain text and the same rows as a JSON-ready dict.
    """
    if not reports:
        raise ValueError("Need at least one design report")

    tables = {
        "parameters": parameter_rows(reports),
        "controllers": controller_rows(reports),
        "metrics": metric_rows(reports),
    }
    titles = {
        "parameters": "Controller parameters",
        "controllers": "Controller transfer functions",
        "metrics": "Peak overshoot and rise time",
    }

    sections = [
        f"{titles[name]}\n{pd.DataFrame(rows).to_string(index=False)}\n"
        for name, rows in tables.items()
    ]
    return "\n".join(sections), tables


class ReportWriter(ABC):

    output_folder: Path
    output_file_name: str

    @abstractmethod
    def get_formatted_lines(self, reports: Sequence[ReportLike]) -> List[str]:
        """Get the formatted lines to write to the output file."""

    def write(self, reports: Sequence[ReportLike]) -> Path:

        output_lines = self.get_formatted_lines(reports)

        output_file = self.output_folder / self.output_file_name

        self.write_output_lines_to_file(output_lines, output_file)

        return output_file

    @staticmethod
    def write_output_lines_to_file(output_lines: List[str], output_file: Path):

        with open(output_file, "w", encoding="utf-8") as out_f:
            for output_line in output_lines:
                out_f.write(output_line)


class TablesReportWriter(ReportWriter):

    output_file_name = "design_tables.txt"

    def __init__(self, output_folder: Path):
        self.output_folder = output_folder

    def get_formatted_lines(self, reports: Sequence[ReportLike]) -> List[str]:
        text, _ = report_tables(reports)
        return [text]


class TablesJsonReportWriter(ReportWriter):

    output_file_name = "design_tables.json"

    def __init__(self, output_folder: Path):
        self.output_folder = output_folder

    def get_formatted_lines(self, reports: Sequence[ReportLike]) -> List[str]:
        _, tables = report_tables(reports)
        return [json.dumps(tables, indent=2, sort_keys=True), "\n"]


class DesignReportJsonWriter(ReportWriter):
    """Full design reports, readable again with ``load_report_dicts``."""

    output_file_name = "design_reports.json"

    def __init__(self, output_folder: Path):
        self.output_folder = output_folder

    def get_formatted_lines(self, reports: Sequence[ReportLike]) -> List[str]:
        report_dicts = [as_report_dict(report) for report in reports]
        return [json.dumps(report_dicts, indent=2, sort_keys=True), "\n"]


def write_traces(report: DesignReport, output_folder: Path) -> List[Path]:
    """One ``iteration,best_fitness`` CSV per optimizer run."""
    output_files = []
    for run_index, run in enumerate(report.all_runs):
        output_file = (
            output_folder
            / f"trace_{report.problem.mode}_{report.problem.algorithm}_{run_index}.csv"
        )
        run.write_trace_csv(output_file)
        output_files.append(output_file)
    return output_files
