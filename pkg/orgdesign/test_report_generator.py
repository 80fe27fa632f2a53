import csv
import io

import numpy as np
import pytest

from orgdesign.engine import RunResult
from orgdesign.genome import Genome
from orgdesign.harness import CaseSpec, ExperimentConfig, ExperimentReport, ReportFormatError, run_experiment
from orgdesign.report_generator import (
    CSV_FIELDS,
    ReportGenerator,
    mean_trajectory,
    read_report,
    render_csv,
    render_html,
    render_json,
    report_rows,
    write_report,
)


@pytest.fixture(scope="module")
def report():
    config = ExperimentConfig(cases=[CaseSpec(5, 10, 40), CaseSpec(6, 10, 50)], runs_per_case=2, base_seed=11)
    return run_experiment(config)


def test_json_is_deterministic(report):
    assert render_json(report) == render_json(report)
    assert render_json(report).endswith("}\n")


def test_json_round_trip(report, tmp_path):
    path = tmp_path / "nested" / "report.json"
    text = write_report(report, "json", path)
    assert path.read_text() == text
    assert read_report(path) == report


def test_csv_matches_cells(report):
    rows = list(csv.DictReader(io.StringIO(render_csv(report))))
    assert len(rows) == len(report.cells) == 6
    for row, cell in zip(rows, report.cells):
        assert int(row["case"]) == cell.leaf_count
        assert row["algorithm"] == cell.algorithm
        assert float(row["apre_percent"]) == cell.apre
        assert float(row["sr"]) == cell.sr
        assert float(row["f_best"]) == report.case(cell.leaf_count).f_best
        assert int(row["runs"]) == 2


def test_csv_without_cells_is_header_only():
    assert render_csv(ExperimentReport(config={})) == ",".join(CSV_FIELDS) + "\n"


def test_rows_of_empty_report():
    empty = ExperimentReport(config={})
    assert report_rows(empty) == []


def test_html_lists_every_case(report):
    html = render_html(report)
    assert html.startswith("<!DOCTYPE html>")
    assert "5" in html and "6" in html
    assert "HGA" in html.upper()


def test_unknown_format(report):
    with pytest.raises(ReportFormatError):
        write_report(report, "xlsx")


def test_unreadable_report(tmp_path):
    path = tmp_path / "other.json"
    path.write_text('{"cells": []}')
    with pytest.raises(ReportFormatError):
        read_report(path)


def test_mean_trajectory_holds_last_value():
    genome = Genome((2, 2), 2)
    runs = [
        RunResult(genome, 20.0, 4, [(1, 10.0), (3, 20.0)]),
        RunResult(genome, 5.0, 2, [(1, 5.0)]),
    ]
    np.testing.assert_allclose(mean_trajectory(runs), [7.5, 7.5, 12.5, 12.5])
    assert mean_trajectory([]).size == 0


def test_generator_writes_all_outputs(report, tmp_path):
    paths = ReportGenerator(tmp_path).generate(report)
    for fmt in ("csv", "json", "html"):
        assert paths[fmt] == tmp_path / f"experiment_report.{fmt}"
        assert paths[fmt].exists()
    assert paths["convergence_n5"].exists()
    assert paths["convergence_n6"].exists()


def test_generator_without_plots(report, tmp_path):
    paths = ReportGenerator(tmp_path).generate(report, formats=["csv"], plots=False)
    assert set(paths) == {"csv"}
    assert not (tmp_path / "plots").exists()
