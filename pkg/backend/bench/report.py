import dataclasses
import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from backend.signals import MarkovSequence
from backend.utils import dump_json

TIMING_FIELDS = ("wall_time_s",)


@dataclass
class Traces:
    true: np.ndarray
    identified: np.ndarray

    @property
    def error(self) -> np.ndarray:
        return self.true - self.identified


@dataclass
class ExperimentReport:
    network: str
    method: str
    scenario: Optional[str] = None
    test_input: str = ""
    validation_input: str = ""
    seed: int = 0
    n_r: Optional[int] = None
    energy_level: Optional[float] = None
    rmse: Optional[float] = None
    rmse_per_channel: List[float] = field(default_factory=list)
    wall_time_s: Optional[float] = None
    stable: bool = False
    diverged: bool = False
    spectral_radius: Optional[float] = None
    poles: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    identifiable_states: Optional[int] = None
    plant_states: Optional[int] = None
    diagnostics: dict = field(default_factory=dict)
    error: Optional[str] = None
    traces: Optional[Traces] = None
    markov: Optional[MarkovSequence] = None
    trace_file: Optional[str] = None

    @property
    def completed(self) -> bool:
        return self.error is None


def failed_report(cfg, exc: Exception) -> ExperimentReport:
    return ExperimentReport(
        network=cfg.network,
        method=cfg.method,
        scenario=cfg.scenario,
        test_input=cfg.test_input.describe(),
        validation_input=cfg.validation_input.describe(),
        seed=cfg.seed,
        n_r=cfg.order,
        error=f"{type(exc).__name__}: {exc}",
    )


def report_to_document(report: ExperimentReport, include_timing: bool = True) -> dict:
    """JSON-ready fields; traces and Markov parameters go to their own CSV files."""
    document = dataclasses.asdict(dataclasses.replace(report, traces=None, markov=None))
    document.pop("traces")
    document.pop("markov")
    if not include_timing:
        for name in TIMING_FIELDS:
            document.pop(name)
    return document


def write_traces(traces: Traces, path: str) -> None:
    n_y = traces.true.shape[0]
    columns = {}
    for prefix, values in (("true", traces.true), ("identified", traces.identified),
                           ("error", traces.error)):
        for c in range(n_y):
            columns[f"{prefix}_ch{c}"] = values[c]
    frame = pd.DataFrame(columns)
    frame.index.name = "step"
    frame.to_csv(path)


def write_report(report: ExperimentReport, path: str) -> None:
    """JSON document at ``path`` plus a ``<stem>_traces.csv`` next to it."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    if report.traces is not None:
        trace_path = os.path.splitext(path)[0] + "_traces.csv"
        write_traces(report.traces, trace_path)
        report.trace_file = os.path.basename(trace_path)
    dump_json(report_to_document(report), path)
    logging.info(f"Wrote {report.method} report to {path}")


def cell_name(report: ExperimentReport) -> str:
    return f"{report.scenario or 'experiment'}_{report.method}"


def format_cell(report: ExperimentReport) -> str:
    if not report.completed:
        return "—"
    text = f"{report.rmse:.4g}"
    if not report.stable or report.diverged:
        text += " (unstable)"
    return text


def markdown_table(reports: List[ExperimentReport]) -> str:
    scenarios = list(dict.fromkeys(r.scenario for r in reports))
    methods = list(dict.fromkeys(r.method for r in reports))
    cells = {(r.scenario, r.method): r for r in reports}

    lines = [
        "| Method | " + " | ".join(str(s) for s in scenarios) + " |",
        "|---" * (len(scenarios) + 1) + "|",
    ]
    for method in methods:
        row = [format_cell(cells[(s, method)]) if (s, method) in cells else "" for s in scenarios]
        lines.append(f"| {method} | " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def write_scenarios(reports: List[ExperimentReport], out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    summary = []
    for report in reports:
        name = cell_name(report)
        write_report(report, os.path.join(out_dir, f"{name}.json"))
        summary.append({
            "scenario": report.scenario,
            "method": report.method,
            "n_r": report.n_r,
            "rmse": report.rmse,
            "stable": report.stable,
            "diverged": report.diverged,
            "wall_time_s": report.wall_time_s,
            "error": report.error,
            "report": f"{name}.json",
        })
    dump_json(summary, os.path.join(out_dir, "scenarios.json"))
    with open(os.path.join(out_dir, "scenarios.md"), "w") as f:
        f.write(markdown_table(reports))
