import json

import pytest
from click.testing import CliRunner

from outlier_explorer.cli import main
from outlier_explorer.data import CorpusSpec, generate_synthetic_corpus, save_csv

from conftest import toy_bundle


@pytest.fixture
def runner():
    return CliRunner()


def write_small_dataset(path):
    spec = CorpusSpec(n_range=(60, 60), m_range=(5, 5))
    dataset = generate_synthetic_corpus(1, rng_seed=3, spec=spec)[0]
    save_csv(dataset, path)


class TestGenCorpus:
    def test_writes_requested_files(self, runner, tmp_path):
        out = tmp_path / "corpus"
        result = runner.invoke(main, ["gen-corpus", "--count", "3",
                                      "--seed", "5", "--out-dir", str(out),
                                      "--points", "60,80",
                                      "--features", "4,6"])
        assert result.exit_code == 0, result.output
        assert len(list(out.glob("*.csv"))) == 3


class TestExplore:
    def test_missing_dataset_machine_readable_error(self, runner, tmp_path):
        result = runner.invoke(main, ["explore", "--dataset",
                                      str(tmp_path / "ghost.csv")])
        assert result.exit_code != 0
        error = json.loads(result.stderr.strip().splitlines()[-1])
        assert error["error"] == "dataset-not-found"

    def test_explore_with_bundle(self, runner, tmp_path):
        dataset = tmp_path / "ds.csv"
        write_small_dataset(dataset)
        bundle_path = tmp_path / "models.json"
        toy_bundle(cost=0.01).save(bundle_path)
        out_dir = tmp_path / "runs"
        result = runner.invoke(main, [
            "explore", "--dataset", str(dataset), "--label-column", "label",
            "--budget", "0.5", "--g", "2", "--models", str(bundle_path),
            "--out", str(out_dir)])
        assert result.exit_code == 0, result.stderr
        payload = json.loads(result.output)
        assert payload["status"] == "completed"
        assert payload["estimated_cost"] <= 0.5 + 1e-9

    def test_infeasible_budget_reports_status(self, runner, tmp_path):
        dataset = tmp_path / "ds.csv"
        write_small_dataset(dataset)
        bundle_path = tmp_path / "models.json"
        toy_bundle(cost=0.01).save(bundle_path)
        result = runner.invoke(main, [
            "explore", "--dataset", str(dataset), "--label-column", "label",
            "--budget", "0.0001", "--models", str(bundle_path),
            "--out", str(tmp_path / "runs")])
        assert result.exit_code == 0
        assert json.loads(result.output)["status"] == "infeasible"


class TestEvaluate:
    def test_emits_default_n_table(self, runner, tmp_path):
        dataset = tmp_path / "ds.csv"
        write_small_dataset(dataset)
        bundle_path = tmp_path / "models.json"
        toy_bundle(cost=0.01).save(bundle_path)
        out_dir = tmp_path / "runs"
        explored = runner.invoke(main, [
            "explore", "--dataset", str(dataset), "--label-column", "label",
            "--models", str(bundle_path), "--out", str(out_dir)])
        run_file = json.loads(explored.output)["run_file"]
        result = runner.invoke(main, ["evaluate", "--run", run_file])
        assert result.exit_code == 0, result.stderr
        table = json.loads(result.output)["table"]
        assert sorted(int(k) for k in table) == [10, 13, 15, 17, 20]

    def test_missing_run_file(self, runner, tmp_path):
        result = runner.invoke(main, ["evaluate", "--run",
                                      str(tmp_path / "none.json")])
        assert result.exit_code != 0
        error = json.loads(result.stderr.strip().splitlines()[-1])
        assert error["error"] == "run-not-found"


class TestTrainMeta:
    def test_full_integration_path(self, runner, tmp_path):
        # dataset scale chosen so the 0.5 s budget is feasible: enough
        # subspaces for every algorithm to absorb its share
        corpus_dir = tmp_path / "corpus"
        gen = runner.invoke(main, ["gen-corpus", "--count", "10", "--seed", "9",
                                   "--out-dir", str(corpus_dir),
                                   "--points", "112,135",
                                   "--features", "29,30"])
        assert gen.exit_code == 0, gen.stderr
        bundle_path = tmp_path / "models.json"
        trained = runner.invoke(main, ["train-meta", "--corpus-dir",
                                       str(corpus_dir), "--split-seed", "2",
                                       "--out", str(bundle_path)])
        assert trained.exit_code == 0, trained.stderr
        report = json.loads(trained.output)["report"]
        assert len(report["cost_r2_train"]) == 5
        assert bundle_path.exists()

        dataset = corpus_dir / "dataset_000.csv"
        explored = runner.invoke(main, [
            "explore", "--dataset", str(dataset), "--label-column", "label",
            "--budget", "0.5", "--gamma", "700", "--models", str(bundle_path),
            "--out", str(tmp_path / "runs")])
        assert explored.exit_code == 0, explored.stderr
        payload = json.loads(explored.output)
        assert payload["status"] == "completed"
        assert payload["estimated_cost"] <= 0.5 + 1e-9

        evaluated = runner.invoke(main, ["evaluate", "--run",
                                         payload["run_file"]])
        assert evaluated.exit_code == 0, evaluated.stderr
        table = json.loads(evaluated.output)["table"]
        assert sorted(int(k) for k in table) == [10, 13, 15, 17, 20]

    def test_empty_corpus_dir(self, runner, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        result = runner.invoke(main, ["train-meta", "--corpus-dir", str(empty),
                                      "--out", str(tmp_path / "m.json")])
        assert result.exit_code != 0
        error = json.loads(result.stderr.strip().splitlines()[-1])
        assert error["error"] == "corpus-empty"
