"""Unit tests for the benchmark harness."""

import numpy as np
import pytest
from pydantic import ValidationError

from src.hlsp_dual.core import bench
from src.hlsp_dual.core.bench import (
    cell_seed,
    phase_shares,
    record_from_report,
    run_solver,
    run_suite,
    summarize_records,
)
from src.hlsp_dual.errors import InvalidParameterError, ProjectionError
from src.hlsp_dual.models.bench import BenchRecord, ExperimentConfig


@pytest.fixture
def baseline_suite():
    return ExperimentConfig(p_min=1, p_max=3, reps=2, seed=7, solvers=["baseline"], threads=1)


class TestCellSeed:
    def test_distinct_per_cell(self):
        seeds = {cell_seed(5, p, rep) for p in range(1, 11) for rep in range(100)}
        assert len(seeds) == 1000

    def test_offset_by_base_seed(self):
        assert cell_seed(1, 2, 3) - cell_seed(0, 2, 3) == 1


class TestRunSolver:
    def test_unknown_solver(self, tall_problem):
        with pytest.raises(InvalidParameterError):
            run_solver(tall_problem, "simplex")

    def test_record_copies_report_fields(self, frozen_problem):
        report = run_solver(frozen_problem, "baseline")
        record = record_from_report(2, 99, report)
        assert record.solver == "baseline"
        assert record.seed == 99
        assert record.objectives == pytest.approx([0.0, 8.0])
        assert record.iters == report.iterations


class TestRunSuite:
    """Tests for run_suite."""

    def test_record_count_and_order(self, baseline_suite):
        records = run_suite(baseline_suite)
        assert len(records) == 6
        assert [record.p for record in records] == [1, 1, 2, 2, 3, 3]
        assert records[1].seed == cell_seed(7, 1, 1)
        assert all(record.status == "converged" for record in records)

    def test_deterministic_across_thread_counts(self, baseline_suite):
        serial = run_suite(baseline_suite)
        threaded = run_suite(baseline_suite.model_copy(update={"threads": 3}))
        assert [r.seed for r in serial] == [r.seed for r in threaded]
        assert [r.objectives for r in serial] == [r.objectives for r in threaded]

    def test_solver_failure_becomes_record(self, baseline_suite, monkeypatch):
        original = bench.run_solver

        def flaky(problem, solver, admm_config=None, ipm_config=None):
            if problem.p == 2:
                raise ProjectionError("no feasible root")
            return original(problem, solver, admm_config, ipm_config)

        monkeypatch.setattr(bench, "run_solver", flaky)
        records = run_suite(baseline_suite)
        failed = [record for record in records if record.status == "failed"]
        assert len(records) == 6
        assert [record.p for record in failed] == [2, 2]
        assert failed[0].message.startswith("ProjectionError")

    @pytest.mark.parametrize(
        "error", [np.linalg.LinAlgError("Matrix is singular"), ValueError("array must not contain infs or NaNs")]
    )
    def test_numerical_error_becomes_record(self, baseline_suite, monkeypatch, error):
        original = bench.run_solver

        def singular(problem, solver, admm_config=None, ipm_config=None):
            if problem.p == 3:
                raise error
            return original(problem, solver, admm_config, ipm_config)

        monkeypatch.setattr(bench, "run_solver", singular)
        records = run_suite(baseline_suite)
        failed = [record for record in records if record.status == "failed"]
        assert len(records) == 6
        assert [record.p for record in failed] == [3, 3]
        assert failed[0].message.startswith(type(error).__name__)

    def test_config_rejects_inverted_range(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(p_min=4, p_max=2)


class TestSummaries:
    """Tests for phase_shares / summarize_records."""

    def test_phase_shares_sum_to_100(self):
        record = BenchRecord(p=2, solver="dhadm", seed=0, status="converged", t_kkt=1.0, t_solve=3.0)
        shares = phase_shares(record)
        assert shares["t_kkt"] == pytest.approx(25.0)
        assert sum(shares.values()) == pytest.approx(100.0)

    def test_phase_shares_without_timings(self):
        record = BenchRecord(p=1, solver="baseline", seed=0, status="converged")
        assert set(phase_shares(record).values()) == {0.0}

    def test_medians_and_objective_gap(self):
        records = [
            BenchRecord(p=2, solver="baseline", seed=1, status="converged", objectives=[0.0, 1.0]),
            BenchRecord(p=2, solver="baseline", seed=2, status="converged", objectives=[0.0, 2.0]),
            BenchRecord(p=2, solver="dhadm", seed=1, status="converged", time_ms=4.0, iters=10, objectives=[0.0, 1.5]),
            BenchRecord(p=2, solver="dhadm", seed=2, status="converged", time_ms=2.0, iters=30, objectives=[0.1, 2.0]),
            BenchRecord(p=2, solver="dhadm", seed=3, status="failed"),
        ]
        summaries = {row.solver: row for row in summarize_records(records)}
        admm = summaries["dhadm"]
        assert admm.runs == 3
        assert admm.failures == 1
        assert admm.median_time_ms == pytest.approx(3.0)
        assert admm.median_iters == pytest.approx(20.0)
        assert admm.max_objective_gap == pytest.approx(0.5)
        assert summaries["baseline"].max_objective_gap is None
