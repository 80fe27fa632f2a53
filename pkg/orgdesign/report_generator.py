"""
Experiment report output.

Reports are written as CSV (one row per case and algorithm), JSON (the full
report including per-run trajectories) or a standalone HTML page. No
timestamps are embedded, so identical experiments produce identical files.
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import matplotlib
matplotlib.use('Agg')  # Use non-interactive backend
import matplotlib.pyplot as plt
from jinja2 import DictLoader, Environment, select_autoescape

from .engine import RunResult
from .harness import ExperimentReport, ReportFormatError

logger = logging.getLogger("OrgDesign.Report")

REPORT_FORMATS = ("csv", "json", "html")
CSV_FIELDS = ["case", "algorithm", "apre_percent", "sr", "f_best", "runs"]


class NumpyEncoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, np.integer):
            return int(o)
        elif isinstance(o, np.floating):
            return float(o)
        elif isinstance(o, np.ndarray):
            return o.tolist()
        return super(NumpyEncoder, self).default(o)


HTML_TEMPLATE = """<!DOCTYPE html>
<html lang="en">
<head>
    <meta charset="UTF-8">
    <title>Organization design experiment</title>
    <style>
        body { font-family: 'Segoe UI', Tahoma, Geneva, Verdana, sans-serif; margin: 2em; color: #333; }
        table { border-collapse: collapse; margin-bottom: 2em; }
        th, td { border: 1px solid #e0e0e0; padding: 4px 10px; text-align: right; }
        th { background-color: #f8f9fa; }
        .failure { color: #f44336; }
        .best { background-color: #ffeb3b; font-weight: bold; }
    </style>
</head>
<body>
    <h1>Organization design experiment</h1>
    <p>{{ config.runs_per_case }} runs per case, maximum depth {{ config.max_depth }},
       mutation rate {{ config.mutation_rate }}, RTS window {{ config.rts_window }}, base seed {{ config.base_seed }}.</p>

    <h2>APRE (%) and success rate</h2>
    <table>
        <tr>
            <th>DBs</th><th>f<sub>best</sub></th><th>source</th>
            {% for name in algorithms %}<th>{{ name|upper }} APRE</th><th>{{ name|upper }} SR</th>{% endfor %}
        </tr>
        {% for row in table %}
        <tr>
            <td>{{ row.case.leaf_count }}</td>
            <td>{{ fmt(row.case.f_best) }}</td>
            <td>{{ row.case.f_best_source }}</td>
            {% for cell in row.cells %}<td{% if cell.apre is not none and cell.apre == row.best_apre %} class="best"{% endif %}>{{ fmt(cell.apre) }}</td><td>{{ fmt(cell.sr) }}</td>{% endfor %}
        </tr>
        {% endfor %}
    </table>

    <h2>Search space</h2>
    <p>Canonical genome counts measure this encoding only and are not comparable to organization counts of other design methods.</p>
    <table>
        <tr><th>DBs</th><th>All genomes</th><th>Canonical genomes</th></tr>
        {% for summary in report.cases %}
        <tr><td>{{ summary.leaf_count }}</td><td>{{ summary.total_genomes }}</td>
            <td>{{ summary.canonical_genomes if summary.canonical_genomes is not none else "n/a" }}</td></tr>
        {% endfor %}
    </table>

    <h2>Wilcoxon signed-rank tests on APRE</h2>
    <table>
        <tr><th>Pair</th><th>W</th><th>n</th><th>p (two-sided)</th></tr>
        {% for comparison in report.comparisons %}
        <tr><td>{{ comparison.first|upper }} / {{ comparison.second|upper }}</td>
            <td>{{ comparison.result.statistic }}</td><td>{{ comparison.result.n_effective }}</td>
            <td>{{ "%.6g"|format(comparison.result.p_two_sided) }}</td></tr>
        {% endfor %}
    </table>

    {% if report.failures %}
    <h2 class="failure">Failed runs</h2>
    <ul>
        {% for failure in report.failures %}
        <li class="failure">{{ failure.algorithm|upper }} N={{ failure.leaf_count }} run {{ failure.run }}: {{ failure.error_type }}: {{ failure.message }}</li>
        {% endfor %}
    </ul>
    {% endif %}
</body>
</html>
"""

_jinja_env = Environment(
    loader=DictLoader({"experiment_report.html": HTML_TEMPLATE}),
    autoescape=select_autoescape(["html"]),
)


def _format_value(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.4f}"


def report_rows(report: ExperimentReport) -> List[Dict[str, Any]]:
    """One row per (case, algorithm) cell with the CSV columns."""
    f_best = {summary.leaf_count: summary.f_best for summary in report.cases}
    return [
        {
            "case": cell.leaf_count,
            "algorithm": cell.algorithm,
            "apre_percent": cell.apre,
            "sr": cell.sr,
            "f_best": f_best.get(cell.leaf_count),
            "runs": len(cell.runs),
        }
        for cell in report.cells
    ]


def render_csv(report: ExperimentReport) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in report_rows(report):
        writer.writerow({key: "" if value is None else value for key, value in row.items()})
    return buffer.getvalue()


def render_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True, cls=NumpyEncoder) + "\n"


def render_html(report: ExperimentReport) -> str:
    algorithms = list(dict.fromkeys(cell.algorithm for cell in report.cells))
    table = []
    for summary in report.cases:
        cells = [report.cell(summary.leaf_count, name) for name in algorithms]
        scored = [cell.apre for cell in cells if cell.apre is not None]
        table.append({
            "case": summary,
            "cells": cells,
            "best_apre": min(scored) if scored else None,
        })
    template = _jinja_env.get_template("experiment_report.html")
    return template.render(
        report=report,
        config=report.config,
        algorithms=algorithms,
        table=table,
        fmt=_format_value,
    )


_RENDERERS = {"csv": render_csv, "json": render_json, "html": render_html}


def write_report(report: ExperimentReport, fmt: str, path: Optional[Union[str, Path]] = None) -> str:
    """
    Render a report and optionally write it to ``path``.

    Args:
        report: Experiment report
        fmt: One of csv, json, html
        path: Output file; nothing is written when omitted

    Returns:
        The rendered text

    Raises:
        ReportFormatError: For an unknown format
    """
    renderer = _RENDERERS.get(fmt.lower())
    if renderer is None:
        raise ReportFormatError(f"Unknown report format {fmt!r}; expected one of {', '.join(REPORT_FORMATS)}")
    text = renderer(report)
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info(f"{fmt.upper()} report written to {path}")
    return text


def read_report(path: Union[str, Path]) -> ExperimentReport:
    """
    Load a JSON report written by ``write_report``.

    Raises:
        ReportFormatError: If the file is not a JSON experiment report
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return ExperimentReport.from_dict(data)
    except json.JSONDecodeError as e:
        raise ReportFormatError(f"{path} is not valid JSON: {e}")
    except (KeyError, TypeError, ValueError) as e:
        raise ReportFormatError(f"{path} is not an experiment report: {e}")


def mean_trajectory(runs: Sequence[RunResult]) -> np.ndarray:
    """
    Mean best-so-far fitness after each candidate evaluation.

    Each run holds its last value up to the longest run's evaluation count.

    Returns:
        Array whose entry i is the mean after i + 1 evaluations
    """
    runs = [result for result in runs if result.trajectory]
    if not runs:
        return np.zeros(0)
    horizon = max(result.evaluations_used for result in runs)
    evaluations = np.arange(1, horizon + 1)
    curves = []
    for result in runs:
        points = np.asarray([point[0] for point in result.trajectory])
        values = np.asarray([point[1] for point in result.trajectory])
        # The first improvement is always the first evaluation.
        index = np.searchsorted(points, evaluations, side="right") - 1
        curves.append(values[np.clip(index, 0, None)])
    return np.mean(curves, axis=0)


def plot_convergence(report: ExperimentReport, output_dir: Union[str, Path]) -> Dict[int, Path]:
    """
    Plot mean best-so-far fitness against candidate evaluations, one figure per case.

    Returns:
        Mapping database count -> path of the saved PNG
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for summary in report.cases:
        cells = [cell for cell in report.cells if cell.leaf_count == summary.leaf_count and cell.runs]
        if not cells:
            continue
        fig, ax = plt.subplots(figsize=(8, 5))
        for cell in cells:
            curve = mean_trajectory(cell.runs)
            ax.plot(np.arange(1, curve.size + 1), curve, label=cell.algorithm.upper())
        if summary.f_best is not None:
            ax.axhline(summary.f_best, color="black", linestyle="--", linewidth=1, label="best known")
        ax.set_xlabel("Evaluations")
        ax.set_ylabel("Mean best utility so far")
        ax.set_title(f"{summary.leaf_count} databases")
        ax.legend(loc="lower right")
        path = output_dir / f"convergence_n{summary.leaf_count}.png"
        fig.savefig(path, dpi=100, bbox_inches="tight")
        plt.close(fig)
        paths[summary.leaf_count] = path
        logger.debug(f"Convergence plot for N={summary.leaf_count} saved to {path}")
    return paths


class ReportGenerator:
    """Writes every requested report format and the convergence plots into one directory."""

    def __init__(self, output_dir: Union[str, Path]):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def generate(self, report: ExperimentReport, formats: Sequence[str] = REPORT_FORMATS,
                 plots: bool = True) -> Dict[str, Path]:
        paths = {}
        for fmt in formats:
            path = self.output_dir / f"experiment_report.{fmt.lower()}"
            write_report(report, fmt, path)
            paths[fmt.lower()] = path
        if plots:
            for leaf_count, path in plot_convergence(report, self.output_dir / "plots").items():
                paths[f"convergence_n{leaf_count}"] = path
        return paths
