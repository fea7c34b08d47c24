# tests/test_run_store.py
"""
Tests for run output persistence.
"""
import json

import pytest

from core.evaluation import CurveRow
from core.exceptions import DataError
from utils.run_store import atomic_write_text, load_json, save_json, staged_out_dir, write_curve


class TestJson:
    """Tests for save_json and load_json."""

    def test_sorted_and_stable(self, tmp_path):
        """Keys are sorted and the same payload gives the same bytes."""
        first = save_json(tmp_path / "a.json", {"b": 1, "a": [0.5, 2]})
        second = save_json(tmp_path / "b.json", {"a": [0.5, 2], "b": 1})
        assert first.read_bytes() == second.read_bytes()
        assert first.read_text().endswith("\n")
        assert list(json.loads(first.read_text())) == ["a", "b"]
        assert load_json(first) == {"a": [0.5, 2], "b": 1}

    def test_nan_refused(self, tmp_path):
        """NaN is not valid JSON and is never written."""
        with pytest.raises(ValueError):
            save_json(tmp_path / "x.json", {"v": float("nan")})
        assert not (tmp_path / "x.json").exists()

    def test_invalid_file(self, tmp_path):
        """Missing files, broken JSON and non-objects are data errors."""
        with pytest.raises(DataError):
            load_json(tmp_path / "missing.json")
        (tmp_path / "bad.json").write_text("{not json")
        with pytest.raises(DataError):
            load_json(tmp_path / "bad.json")
        (tmp_path / "list.json").write_text("[1, 2]")
        with pytest.raises(DataError):
            load_json(tmp_path / "list.json")


class TestFiles:
    """Tests for atomic writes and curve tables."""

    def test_atomic_write_leaves_no_temporaries(self, tmp_path):
        """Only the destination remains after a write."""
        atomic_write_text(tmp_path / "out" / "f.txt", "hello\n")
        assert [p.name for p in (tmp_path / "out").iterdir()] == ["f.txt"]
        assert (tmp_path / "out" / "f.txt").read_text() == "hello\n"

    def test_staged_out_dir_moves_files(self, tmp_path):
        """Files written into the stage land in nested output directories."""
        target = tmp_path / "x" / "y"
        with staged_out_dir(target) as stage:
            save_json(stage / "models" / "m.json", {"a": 1})
            atomic_write_text(stage / "r.txt", "done\n")
            assert not target.exists()
        assert load_json(target / "models" / "m.json") == {"a": 1}
        assert (target / "r.txt").read_text() == "done\n"
        assert sorted(p.name for p in (tmp_path / "x").iterdir()) == ["y"]

    def test_staged_out_dir_failure_leaves_nothing(self, tmp_path):
        """A failing block removes the stage and never creates the output directory."""
        target = tmp_path / "runs"
        with pytest.raises(DataError):
            with staged_out_dir(target) as stage:
                save_json(stage / "models" / "m.json", {"a": 1})
                raise DataError("bad validation data")
        assert not target.exists()
        assert list(tmp_path.iterdir()) == []

    def test_staged_out_dir_keeps_existing_files_on_failure(self, tmp_path):
        """An earlier run's outputs survive a failed rerun untouched."""
        target = tmp_path / "runs"
        save_json(target / "old.json", {"v": 1})
        before = (target / "old.json").read_bytes()
        with pytest.raises(RuntimeError):
            with staged_out_dir(target) as stage:
                save_json(stage / "old.json", {"v": 2})
                raise RuntimeError("boom")
        assert (target / "old.json").read_bytes() == before
        assert [p.name for p in target.iterdir()] == ["old.json"]

    def test_curve_table(self, tmp_path):
        """Header, float formatting and the NA marker for undefined accuracy."""
        rows = [
            CurveRow(method="lwr", c=0.1, rejection_rate=0.0, accuracy=0.75, risk_per_sample=0.25),
            CurveRow(method="svm", c=0.2, rejection_rate=1.0, accuracy=None, risk_per_sample=0.2),
        ]
        path = write_curve(tmp_path / "curve.csv", rows)
        assert path.read_text() == (
            "method,c,rejection_rate,accuracy,risk_per_sample\n"
            "lwr,0.1,0.0,0.75,0.25\n"
            "svm,0.2,1.0,NA,0.2\n"
        )
