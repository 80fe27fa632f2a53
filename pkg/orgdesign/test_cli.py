import json

import pytest

from orgdesign.cli import EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from orgdesign.harness import CaseSpec, ExperimentConfig, run_experiment
from orgdesign.report_generator import write_report


@pytest.fixture
def report_file(tmp_path):
    config = ExperimentConfig(cases=[CaseSpec(5, 10, 40)], runs_per_case=2, base_seed=1)
    path = tmp_path / "report.json"
    write_report(run_experiment(config), "json", path)
    return path


class TestDecode:
    def test_tree_document(self, capsys):
        assert main(["decode", "--genome", "2 2 3 1 2 3", "--max-depth", "3"]) == EXIT_OK
        tree = json.loads(capsys.readouterr().out)
        assert len(tree["roots"]) == 2

    def test_with_utility(self, capsys):
        assert main(["decode", "--genome", "2", "--max-depth", "2", "--evaluate"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["utility"] == pytest.approx(674.29, abs=0.01)

    def test_malformed_genome(self):
        assert main(["decode", "--genome", "2 x", "--max-depth", "3"]) == EXIT_USAGE

    def test_digit_above_bound(self):
        assert main(["decode", "--genome", "2 4", "--max-depth", "3"]) == EXIT_USAGE


class TestEncode:
    def test_tree_file(self, tmp_path, capsys):
        tree = [{"role": "mediator", "children": [
            {"role": "database"},
            {"role": "aggregator", "children": [{"role": "database"}, {"role": "database"}]},
        ]}]
        path = tmp_path / "tree.json"
        path.write_text(json.dumps(tree))
        assert main(["encode", "--tree", str(path), "--max-depth", "4"]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "2 3"

    def test_simplified(self, tmp_path, capsys):
        tree = [{"role": "mediator", "children": [
            {"role": "aggregator", "children": [{"role": "database"}, {"role": "database"}]},
        ]}]
        path = tmp_path / "chain.json"
        path.write_text(json.dumps(tree))
        assert main(["encode", "--tree", str(path), "--simplify"]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "2"

    def test_missing_file(self, tmp_path):
        assert main(["encode", "--tree", str(tmp_path / "absent.json")]) == EXIT_IO


class TestEnumerate:
    def test_count_only(self, capsys):
        assert main(["enumerate", "--dbs", "3", "--max-depth", "2", "--count-only"]) == EXIT_OK
        assert capsys.readouterr().out.splitlines() == ["genomes 4", "canonical 4"]

    def test_listing(self, capsys):
        assert main(["enumerate", "--dbs", "2", "--max-depth", "4"]) == EXIT_OK
        assert capsys.readouterr().out.splitlines() == ["1", "2", "3", "4"]

    def test_canonical_listing(self, capsys):
        assert main(["enumerate", "--dbs", "2", "--max-depth", "4", "--canonical"]) == EXIT_OK
        assert capsys.readouterr().out.splitlines() == ["1", "2"]

    def test_best(self, capsys):
        assert main(["enumerate", "--dbs", "2", "--max-depth", "4", "--best"]) == EXIT_OK
        assert capsys.readouterr().out.strip().endswith("genome 2")

    def test_space_too_large(self):
        assert main(["enumerate", "--dbs", "30", "--max-depth", "4", "--count-only"]) == EXIT_INFEASIBLE


class TestRun:
    def test_prints_result(self, tmp_path, capsys):
        out = tmp_path / "run.json"
        argv = ["run", "--dbs", "6", "--pop", "10", "--evals", "50", "--seed", "1", "--out", str(out)]
        assert main(argv) == EXIT_OK
        lines = dict(line.split(" ", 1) for line in capsys.readouterr().out.splitlines())
        assert lines["evaluations"] == "50"
        payload = json.loads(out.read_text())
        assert payload["result"]["best_fitness"] == pytest.approx(float(lines["best_fitness"]), abs=1e-6)
        assert payload["config"]["algorithm"] == "hga"

    def test_nothing_feasible(self, tmp_path):
        env = tmp_path / "env.json"
        env.write_text(json.dumps({"utility_ceiling": 1.0}))
        argv = ["run", "--dbs", "4", "--pop", "4", "--evals", "8", "--rts-window", "2", "--env", str(env)]
        assert main(argv) == EXIT_INFEASIBLE

    def test_invalid_arguments(self):
        assert main(["run", "--dbs", "1"]) == EXIT_USAGE
        assert main(["run", "--dbs", "6", "--pop", "10", "--evals", "5"]) == EXIT_USAGE

    def test_missing_required_argument(self):
        assert main(["run"]) == EXIT_USAGE

    def test_unknown_algorithm(self):
        assert main(["run", "--dbs", "6", "--algo", "ga"]) == EXIT_USAGE


class TestStats:
    def test_table_and_tests(self, report_file, tmp_path, capsys):
        out = tmp_path / "table.csv"
        assert main(["stats", "--reports", str(report_file), "--out", str(out)]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "case,algorithm,apre_percent,sr,f_best,runs"
        assert len([line for line in lines if line.startswith("5,")]) == 3
        assert sum(line.startswith("# wilcoxon ") for line in lines) == 3
        assert out.read_text().splitlines()[0] == lines[0]

    def test_missing_report(self, tmp_path):
        assert main(["stats", "--reports", str(tmp_path / "absent.json")]) == EXIT_IO

    def test_not_a_report(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["stats", "--reports", str(path)]) == EXIT_USAGE


def test_experiment_writes_reports(tmp_path, capsys):
    config = ExperimentConfig(cases=[CaseSpec(5, 10, 40)], algorithms=["hga", "sga1"], runs_per_case=2)
    config_path = tmp_path / "experiment.json"
    config_path.write_text(json.dumps(config.to_dict()))
    out_dir = tmp_path / "results"
    argv = ["experiment", "--config", str(config_path), "--out-dir", str(out_dir), "--formats", "json", "csv"]
    assert main(argv) == EXIT_OK
    assert (out_dir / "experiment_report.json").exists()
    assert (out_dir / "experiment_report.csv").exists()
    assert (out_dir / "plots" / "convergence_n5.png").exists()
    assert "json" in capsys.readouterr().out
