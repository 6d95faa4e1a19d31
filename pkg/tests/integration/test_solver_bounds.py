"""Seeded suites bounding accuracy, iteration counts and speed of the dual solvers.

Tests marked ``slow`` run the full p = 9 / p = 10 suites; deselect them with
``-m "not slow"``.
"""

import statistics

import numpy as np
import pytest

from src.hlsp_dual.core.bench import run_solver
from src.hlsp_dual.core.problem import generate_random_hierarchy
from src.hlsp_dual.models.config import AdmmConfig, IpmConfig

FULL_RANK_SEEDS = range(1000, 1050)
DEFICIENT_SEEDS = range(20)


def _full_rank_cases():
    return [(seed, 2 + seed % 5) for seed in FULL_RANK_SEEDS]


def _within(objectives, reference, tol) -> bool:
    return all(abs(a - b) <= max(tol, tol * abs(b)) for a, b in zip(objectives, reference))


def _not_worse(objectives, reference, margin) -> bool:
    return all(a <= b + margin for a, b in zip(objectives, reference))


def test_interior_point_matches_baseline_on_full_rank_suite() -> None:
    mismatched = []
    for seed, p in _full_rank_cases():
        problem = generate_random_hierarchy(p, seed, full_rank=True)
        reference = run_solver(problem, "baseline")
        report = run_solver(problem, "dhipm", ipm_config=IpmConfig())
        if not _within(report.objectives, reference.objectives, 1e-4):
            mismatched.append((seed, p))
    assert mismatched == []


@pytest.mark.parametrize("p", [2, 3, 4, 5, 6])
def test_interior_point_closes_duality_gap_on_feasible_hierarchies(p) -> None:
    for seed in range(5):
        problem = generate_random_hierarchy(p, seed, full_rank=True, feasible=True)
        report = run_solver(problem, "dhipm", ipm_config=IpmConfig())
        assert report.status == "converged"
        assert max(abs(gap) for gap in report.duality_gap) <= 1e-6


@pytest.mark.slow
def test_interior_point_not_worse_than_baseline_on_deficient_suite() -> None:
    worse = []
    for seed in DEFICIENT_SEEDS:
        problem = generate_random_hierarchy(10, seed)
        reference = run_solver(problem, "baseline")
        report = run_solver(problem, "dhipm", ipm_config=IpmConfig())
        if not _not_worse(report.objectives, reference.objectives, 1e-2):
            worse.append(seed)
    assert worse == []


@pytest.mark.slow
def test_admm_matches_baseline_on_full_rank_suite() -> None:
    mismatched = []
    for seed, p in _full_rank_cases():
        problem = generate_random_hierarchy(p, seed, full_rank=True)
        reference = run_solver(problem, "baseline")
        report = run_solver(problem, "dhadm", admm_config=AdmmConfig())
        if not _within(report.objectives, reference.objectives, 1e-2):
            mismatched.append((seed, p))
    assert mismatched == []


@pytest.mark.slow
def test_admm_residual_band_and_speed_at_ten_levels() -> None:
    residuals, ratios, worse = [], [], []
    for seed in DEFICIENT_SEEDS:
        problem = generate_random_hierarchy(10, seed)
        admm = run_solver(problem, "dhadm", admm_config=AdmmConfig())
        ipm = run_solver(problem, "dhipm", ipm_config=IpmConfig())
        reference = run_solver(problem, "baseline")
        residuals.append(admm.residual_norm)
        ratios.append(ipm.wall_time_ms / admm.wall_time_ms)
        if admm.status == "converged" and not _not_worse(admm.objectives, reference.objectives, 1e-2):
            worse.append(seed)

    assert sum(residual <= 1e-2 for residual in residuals) >= 0.95 * len(residuals)
    assert statistics.median(ratios) >= 3.0
    assert worse == []


@pytest.mark.slow
def test_admm_iterations_at_nine_levels() -> None:
    iterations = [
        run_solver(generate_random_hierarchy(9, seed), "dhadm", admm_config=AdmmConfig()).iterations
        for seed in range(10)
    ]
    assert statistics.median(iterations) <= 5000


@pytest.mark.slow
@pytest.mark.parametrize("p", [2, 3, 4])
def test_admm_equilibration_does_not_change_objectives(p) -> None:
    problem = generate_random_hierarchy(p, 11, full_rank=True)
    config = AdmmConfig(chi=1e-10, max_iters=50_000)
    scaled = run_solver(problem, "dhadm", admm_config=config)
    direct = run_solver(problem, "dhadm", admm_config=config.model_copy(update={"precondition": False}))
    np.testing.assert_allclose(scaled.objectives, direct.objectives, atol=1e-6)
