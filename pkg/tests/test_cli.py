# tests/test_cli.py
"""
Integration tests for the lwr command line.
"""
import json

import numpy as np
import pytest
from click.testing import CliRunner

from cli.eval_commands import evaluate_record
from cli.main import EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_DATA, cli
from cli.schemas import LwrModelRecord
from core.objective import recover_slacks
from core.synthetic import GaussianMixtureSpec, chow_oracle
from core.trainer import train
from core.types import LwrHyperparams
from tests.conftest import make_dataset
from utils.file_handler import load_dataset, write_probabilities


@pytest.fixture
def runner():
    """Click test runner."""
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(cli, [str(a) for a in args], catch_exceptions=False)


def toy_train_args(toy_paths, out_dir, *extra):
    labels, phi, phi_prime = toy_paths
    return ("train", "--labels", labels, "--phi", phi, "--phi-prime", phi_prime, "--out-dir", out_dir,
            "--max-iterations", 20000, "--quiet") + extra


def synth(runner, out_dir, m, seed, *extra):
    result = invoke(runner, "synth", "--m", m, "--dim", 1, "--seed", seed, "--c-list", "0.2",
                    "--out-dir", out_dir, *extra)
    assert result.exit_code == 0, result.output
    return out_dir / "labels.csv", out_dir / "phi.csv", out_dir / "phi_prime.csv"


def file_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.mark.integration
class TestTrainCommand:
    """Tests for `lwr train`."""

    def test_single_cell(self, runner, toy_paths, tmp_path):
        """One c and one lambda pair write one model file and a report."""
        out = tmp_path / "run"
        result = invoke(runner, *toy_train_args(toy_paths, out, "--c-list", "0.25",
                                                "--lambda-grid", "0.1", "--lambda-prime-grid", "0.1"))
        assert result.exit_code == 0, result.output
        model = json.loads((out / "models" / "lwr_c0.25.json").read_text())
        assert model["kind"] == "lwr"
        assert (model["c"], model["lam"], model["lam_prime"]) == (0.25, 0.1, 0.1)
        report = json.loads((out / "train_report.json").read_text())
        assert report["validation"] == "train"
        assert report["model_files"] == ["models/lwr_c0.25.json"]

    def test_rerun_is_bit_identical(self, runner, toy_paths, tmp_path):
        """Same inputs and seed give byte-identical outputs."""
        args = ("--c-list", "0.1,0.3", "--lambda-grid", "0.1,1", "--lambda-prime-grid", "1")
        assert invoke(runner, *toy_train_args(toy_paths, tmp_path / "a", *args)).exit_code == 0
        assert invoke(runner, *toy_train_args(toy_paths, tmp_path / "b", *args)).exit_code == 0
        assert file_bytes(tmp_path / "a") == file_bytes(tmp_path / "b")

    def test_grid_size(self, runner, toy_paths, tmp_path):
        """2 costs x 3 x 3 lambdas train 18 cells and keep one model per cost."""
        out = tmp_path / "grid"
        result = invoke(runner, *toy_train_args(toy_paths, out, "--c-list", "0.3,0.1",
                                                "--lambda-grid", "0.01,0.1,1", "--lambda-prime-grid", "0.01,0.1,1"))
        assert result.exit_code == 0, result.output
        report = json.loads((out / "train_report.json").read_text())
        assert len(report["candidates"]) == 18
        assert sorted(p.name for p in (out / "models").iterdir()) == ["lwr_c0.1.json", "lwr_c0.3.json"]
        for c in (0.1, 0.3):
            assert sum(cand["selected"] for cand in report["candidates"] if cand["c"] == c) == 1

    def test_config_file_with_override(self, runner, toy_paths, fixtures_dir, tmp_path):
        """Flags win over the config file; unset keys come from the file."""
        out = tmp_path / "cfg"
        result = invoke(runner, *toy_train_args(toy_paths, out, "--config", fixtures_dir / "toy_train.cfg",
                                                "--c-list", "0.1,0.2"))
        assert result.exit_code == 0, result.output
        report = json.loads((out / "train_report.json").read_text())
        assert report["c_list"] == [0.1, 0.2]
        assert report["lambda_grid"] == [0.1]
        assert len(report["candidates"]) == 2

    def test_missing_phi_prime(self, runner, toy_paths, tmp_path):
        """A missing required input exits with the config code and writes nothing."""
        labels, phi, _ = toy_paths
        out = tmp_path / "nothing"
        result = invoke(runner, "train", "--labels", labels, "--phi", phi, "--out-dir", out)
        assert result.exit_code == EXIT_CONFIG
        assert "phi_prime" in result.output
        assert not out.exists()

    def test_unknown_config_key(self, runner, toy_paths, tmp_path):
        """Unknown keys in a config file are refused."""
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("bogus=1\n")
        result = invoke(runner, *toy_train_args(toy_paths, tmp_path / "out", "--config", cfg))
        assert result.exit_code == EXIT_CONFIG

    def test_invalid_cost(self, runner, toy_paths, tmp_path):
        """c = 0.5 is outside (0, 1/2)."""
        result = invoke(runner, *toy_train_args(toy_paths, tmp_path / "out", "--c-list", "0.5"))
        assert result.exit_code == EXIT_CONFIG

    def test_bad_data(self, runner, toy_paths, fixtures_dir, tmp_path):
        """A duplicated id exits with the data code."""
        labels, _, phi_prime = toy_paths
        result = invoke(runner, "train", "--labels", labels, "--phi", fixtures_dir / "toy_phi_duplicate_id.csv",
                        "--phi-prime", phi_prime, "--out-dir", tmp_path / "out")
        assert result.exit_code == EXIT_DATA

    def test_non_convergence(self, runner, tmp_path):
        """A problem too large for refinement with a single iteration exits with the convergence code."""
        paths = synth(runner, tmp_path / "big", 500, 1)
        result = invoke(runner, "train", "--labels", paths[0], "--phi", paths[1], "--phi-prime", paths[2],
                        "--c-list", "0.2", "--lambda-grid", "1", "--lambda-prime-grid", "1",
                        "--max-iterations", 1, "--out-dir", tmp_path / "out", "--quiet")
        assert result.exit_code == EXIT_CONVERGENCE
        assert "c=0.2" in result.output

    def test_failed_baseline_writes_nothing(self, runner, toy_paths, tmp_path):
        """An SVM stage that fails after LwR trained leaves the output directory absent."""
        labels, phi, phi_prime = toy_paths
        val_labels = tmp_path / "val_labels.csv"
        val_labels.write_text("id,label\na,+1\nb,+1\nc,+1\n")
        out = tmp_path / "run"
        result = invoke(runner, *toy_train_args(toy_paths, out, "--c-list", "0.2", "--lambda-grid", "0.1",
                                                "--lambda-prime-grid", "0.1", "--baselines",
                                                "--val-labels", val_labels, "--val-phi", phi,
                                                "--val-phi-prime", phi_prime))
        assert result.exit_code == EXIT_DATA
        assert "No SVM baseline" in result.output
        assert not out.exists()
        assert list(tmp_path.iterdir()) == [val_labels]

    def test_model_files_carry_grids(self, runner, toy_paths, tmp_path):
        """Each model file records the grids its lambda values were selected from."""
        out = tmp_path / "run"
        result = invoke(runner, *toy_train_args(toy_paths, out, "--c-list", "0.25",
                                                "--lambda-grid", "0.1,1", "--lambda-prime-grid", "0.01"))
        assert result.exit_code == 0, result.output
        model = json.loads((out / "models" / "lwr_c0.25.json").read_text())
        assert model["lambda_grid"] == [0.1, 1.0]
        assert model["lambda_prime_grid"] == [0.01]


@pytest.mark.integration
class TestEvalCommand:
    """Tests for `lwr eval`."""

    def test_evaluate_trained_models(self, runner, toy_paths, tmp_path):
        """Models written by train are evaluated into curve.csv and eval_report.json."""
        train_out = tmp_path / "train"
        assert invoke(runner, *toy_train_args(toy_paths, train_out, "--c-list", "0.2,0.4",
                                              "--lambda-grid", "0.1", "--lambda-prime-grid", "0.1")).exit_code == 0
        labels, phi, phi_prime = toy_paths
        out = tmp_path / "eval"
        result = invoke(runner, "eval", "--labels", labels, "--phi", phi, "--phi-prime", phi_prime,
                        "--model-dir", train_out / "models", "--out-dir", out)
        assert result.exit_code == 0, result.output
        lines = (out / "curve.csv").read_text().splitlines()
        assert lines[0] == "method,c,rejection_rate,accuracy,risk_per_sample"
        assert [line.split(",")[:2] for line in lines[1:]] == [["lwr", "0.2"], ["lwr", "0.4"]]
        report = json.loads((out / "eval_report.json").read_text())
        assert [entry["n_samples"] for entry in report["lwr"]] == [3, 3]

    def test_rerun_is_bit_identical(self, runner, toy_paths, fixtures_dir, tmp_path):
        """Evaluating the same models and probabilities twice gives byte-identical outputs."""
        train_out = tmp_path / "train"
        assert invoke(runner, *toy_train_args(toy_paths, train_out, "--c-list", "0.2,0.4",
                                              "--lambda-grid", "0.1,1", "--lambda-prime-grid", "0.1")).exit_code == 0
        labels, phi, phi_prime = toy_paths
        probs = fixtures_dir / "toy_probabilities.csv"
        for name in ("a", "b"):
            result = invoke(runner, "eval", "--labels", labels, "--phi", phi, "--phi-prime", phi_prime,
                            "--model-dir", train_out / "models", "--probabilities", probs,
                            "--val-probabilities", probs, "--val-labels", labels, "--c-list", "0.2,0.4",
                            "--out-dir", tmp_path / name)
            assert result.exit_code == 0, result.output
        assert file_bytes(tmp_path / "a") == file_bytes(tmp_path / "b")
        report = json.loads((tmp_path / "a" / "eval_report.json").read_text())
        assert report["lambda_grid"] == [0.1, 1.0]
        assert report["lambda_prime_grid"] == [0.1]
        assert [(s["method"], s["c"]) for s in report["selected"]] == [("lwr", 0.2), ("lwr", 0.4)]
        assert all(s["lam"] in (0.1, 1.0) for s in report["selected"])
        assert [s["lam_prime"] for s in report["selected"]] == [0.1, 0.1]
        assert "external" in report

    def test_external_probabilities(self, runner, toy_paths, fixtures_dir, tmp_path):
        """External probabilities get a tuned threshold per c."""
        labels, phi, phi_prime = toy_paths
        probs = fixtures_dir / "toy_probabilities.csv"
        out = tmp_path / "ext"
        result = invoke(runner, "eval", "--labels", labels, "--phi", phi, "--phi-prime", phi_prime,
                        "--probabilities", probs, "--val-probabilities", probs, "--val-labels", labels,
                        "--c-list", "0.1,0.4", "--out-dir", out)
        assert result.exit_code == 0, result.output
        rows = (out / "curve.csv").read_text().splitlines()[1:]
        assert [row.split(",")[0] for row in rows] == ["external", "external"]

    def test_dimension_mismatch(self, runner, toy_paths, tmp_path):
        """Test features of the wrong width exit with the data code."""
        train_out = tmp_path / "train"
        assert invoke(runner, *toy_train_args(toy_paths, train_out, "--c-list", "0.2",
                                              "--lambda-grid", "0.1", "--lambda-prime-grid", "0.1")).exit_code == 0
        labels, _, phi_prime = toy_paths
        result = invoke(runner, "eval", "--labels", labels, "--phi", phi_prime, "--phi-prime", phi_prime,
                        "--model-dir", train_out / "models", "--out-dir", tmp_path / "eval")
        assert result.exit_code == EXIT_DATA

    def test_nothing_to_evaluate(self, runner, toy_paths, tmp_path):
        """Neither models nor probabilities is a config error."""
        labels, phi, phi_prime = toy_paths
        result = invoke(runner, "eval", "--labels", labels, "--phi", phi, "--phi-prime", phi_prime,
                        "--out-dir", tmp_path / "eval")
        assert result.exit_code == EXIT_CONFIG


@pytest.mark.integration
class TestSynthAndSweep:
    """Tests for `lwr synth` and `lwr sweep`."""

    def test_synth_outputs(self, runner, tmp_path):
        """synth writes the dataset and the oracle summary, deterministically."""
        paths = synth(runner, tmp_path / "a", 80, 3, "--second-space", "squared")
        synth(runner, tmp_path / "b", 80, 3, "--second-space", "squared")
        assert file_bytes(tmp_path / "a") == file_bytes(tmp_path / "b")
        data = load_dataset(*paths)
        assert (data.m, data.phi.dims, data.phi_prime.dims) == (80, 1, 2)
        summary = json.loads((tmp_path / "a" / "summary.json").read_text())
        expected = chow_oracle(GaussianMixtureSpec.symmetric(), 0.2)[1]
        assert summary["oracle"] == [{"c": 0.2, "risk": pytest.approx(expected)}]

    def test_synth_invalid_projection(self, runner, tmp_path):
        """projection_dim needs the rotation space."""
        result = invoke(runner, "synth", "--projection-dim", 1, "--out-dir", tmp_path / "s")
        assert result.exit_code == EXIT_CONFIG

    @pytest.mark.slow
    def test_sweep_all_methods(self, runner, tmp_path):
        """sweep writes curve rows for LwR, the SVM baseline and external probabilities, plus the gap report."""
        train = synth(runner, tmp_path / "train", 150, 1)
        val = synth(runner, tmp_path / "val", 100, 2)
        test = synth(runner, tmp_path / "test", 200, 3)
        rule, _ = chow_oracle(GaussianMixtureSpec.symmetric(), 0.2)
        for name, paths in (("val", val), ("test", test)):
            data = load_dataset(*paths)
            table = dict(zip(data.sample_ids, rule.posterior(data.phi.values).tolist()))
            write_probabilities(table, tmp_path / f"{name}_probs.csv")

        costs = ("0.1", "0.2", "0.3", "0.4")
        for name in ("sweep", "again"):
            result = invoke(
                runner, "sweep",
                "--labels", train[0], "--phi", train[1], "--phi-prime", train[2],
                "--val-labels", val[0], "--val-phi", val[1], "--val-phi-prime", val[2],
                "--test-labels", test[0], "--test-phi", test[1], "--test-phi-prime", test[2],
                "--probabilities", tmp_path / "test_probs.csv", "--val-probabilities", tmp_path / "val_probs.csv",
                "--c-list", ",".join(costs), "--lambda-grid", "0.1", "--lambda-prime-grid", "0.1",
                "--max-iterations", 20000, "--num-draws", 50, "--out-dir", tmp_path / name, "--quiet",
            )
            assert result.exit_code == 0, result.output
        out = tmp_path / "sweep"
        assert file_bytes(out) == file_bytes(tmp_path / "again")

        rows = [line.split(",") for line in (out / "curve.csv").read_text().splitlines()[1:]]
        assert [(r[0], r[1]) for r in rows] == [(method, c) for method in ("lwr", "svm", "external") for c in costs]
        for method, c, rejection_rate, accuracy, risk in rows:
            c, rej, risk = float(c), float(rejection_rate), float(risk)
            if accuracy == "NA":
                assert rej == 1.0 and risk == pytest.approx(c, abs=1e-12)
            else:
                error_rate = (1.0 - float(accuracy)) * (1.0 - rej)
                assert risk == pytest.approx(error_rate + c * rej, abs=1e-12), (method, c)

        gaps = json.loads((out / "gap_report.json").read_text())["lwr"]
        assert [g["c"] for g in gaps] == [0.1, 0.2, 0.3, 0.4]
        for g in gaps:
            assert g["excess"] == pytest.approx(g["risk_test"] - g["risk_train"])
            assert g["gap"] == pytest.approx(abs(g["excess"]))
            assert g["bound_rhs"] >= g["risk_train"]
            assert g["holds"] == (g["risk_test"] <= g["bound_rhs"] + 1e-12)
        report = json.loads((out / "eval_report.json").read_text())
        assert (report["lambda_grid"], report["lambda_prime_grid"]) == ([0.1], [0.1])
        assert report["c_list"] == [0.1, 0.2, 0.3, 0.4]
        assert (out / "models" / "svm_c0.1.json").is_file()


class TestEvaluateRecord:
    """Tests for evaluate_record against the training slacks."""

    def test_losses_bounded_by_slacks(self, rng, fast_cfg):
        """Every per-sample rejection loss is at most its slack and small slacks mean accepted and correct."""
        c = 0.3
        labels = np.where(rng.random(50) < 0.5, 1, -1)
        data = make_dataset(labels, rng.normal(size=(50, 2)) + labels[:, None], rng.normal(size=(50, 2)))
        model = train(data, LwrHyperparams(c=c, lam=0.1, lam_prime=0.1), fast_cfg)
        xi = recover_slacks(model, data)

        record = LwrModelRecord.model_validate(json.loads(json.dumps(LwrModelRecord.from_model(model).model_dump())))
        report = evaluate_record(record, data)
        losses = np.array([
            c if decision.is_reject else float(decision.predicted_label != y)
            for decision, y in zip(report.decisions, data.labels.tolist())
        ])
        assert np.all(losses <= xi + 1e-12)
        assert report.risk_total <= float(xi.sum()) + 1e-9
        for decision, y, slack in zip(report.decisions, data.labels.tolist(), xi.tolist()):
            if slack < c:
                assert not decision.is_reject
                assert decision.predicted_label == y


class TestVersion:
    """Tests for the command group itself."""

    def test_version(self, runner):
        """--version prints the program version."""
        result = invoke(runner, "--version")
        assert result.exit_code == 0
        assert "1.0.0" in result.output
