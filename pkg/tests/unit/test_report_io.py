"""Unit tests for the benchmark and Jacobian CSV files."""

import csv

import numpy as np
import pytest

from src.hlsp_dual.core.bench import run_suite
from src.hlsp_dual.errors import DimensionMismatchError, ProblemIOError, ProblemParseError
from src.hlsp_dual.models.bench import BenchRecord, ExperimentConfig
from src.hlsp_dual.tools.report_io import csv_columns, emit_csv, emit_jacobian_csv, read_csv


class TestBenchCsv:
    """Tests for emit_csv / read_csv."""

    def test_empty_suite_writes_header_only(self, tmp_path):
        path = emit_csv([], tmp_path / "empty.csv")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines == [",".join(csv_columns(0))]
        assert read_csv(path) == []

    def test_columns(self):
        columns = csv_columns(2)
        assert columns[:7] == ["p", "solver", "seed", "status", "time_ms", "iters", "residual"]
        assert columns[7:9] == ["obj_1", "obj_2"]
        assert columns[9] == "refactors"
        assert columns[-1] == "message"

    def test_records_survive_a_round_trip(self, tmp_path):
        records = run_suite(ExperimentConfig(p_min=1, p_max=3, reps=1, seed=3, solvers=["baseline"], threads=1))
        path = emit_csv(records, tmp_path / "out" / "bench.csv")
        assert read_csv(path) == records

    def test_shorter_rows_leave_objectives_empty(self, tmp_path):
        records = [
            BenchRecord(p=1, solver="baseline", seed=0, status="converged", objectives=[0.5]),
            BenchRecord(p=2, solver="baseline", seed=1, status="converged", objectives=[0.0, 0.25]),
        ]
        path = emit_csv(records, tmp_path / "bench.csv")
        with path.open(newline="", encoding="utf-8") as handle:
            rows = list(csv.DictReader(handle))
        assert rows[0]["obj_2"] == ""
        assert float(rows[1]["obj_2"]) == 0.25

    def test_invalid_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(",".join(csv_columns(1)) + "\n1,baseline,0,exploded,1,1,0,0,0,0,0,0,0,0,0,\n", encoding="utf-8")
        with pytest.raises(ProblemParseError):
            read_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ProblemIOError):
            read_csv(tmp_path / "absent.csv")


class TestJacobianCsv:
    """Tests for emit_jacobian_csv."""

    def test_layout(self, tmp_path):
        jacobian = np.arange(10, dtype=float).reshape(2, 5)
        path = emit_jacobian_csv(jacobian, [3, 2], tmp_path / "jac.csv")
        with path.open(newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["x", "b_1_1", "b_1_2", "b_1_3", "b_2_1", "b_2_2"]
        assert rows[1][0] == "1"
        assert [float(value) for value in rows[2][1:]] == [5.0, 6.0, 7.0, 8.0, 9.0]

    def test_column_count_mismatch(self, tmp_path):
        with pytest.raises(DimensionMismatchError):
            emit_jacobian_csv(np.zeros((2, 4)), [3, 2], tmp_path / "jac.csv")
