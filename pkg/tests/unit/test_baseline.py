"""Unit tests for the sequential nullspace solver."""

import numpy as np
import pytest

from src.hlsp_dual.core.baseline import (
    nullspace_basis,
    reconstruct_multipliers,
    solve_baseline,
    solve_sequential,
)
from src.hlsp_dual.core.problem import generate_random_hierarchy
from src.hlsp_dual.errors import EmptyHierarchyError
from src.hlsp_dual.models.problem import HlspProblem


class TestNullspaceBasis:
    """Tests for nullspace_basis."""

    def test_single_row(self):
        basis = nullspace_basis(np.array([[1.0, 0.0, 0.0]]))
        assert basis.rank == 1
        assert basis.n_r == 2
        np.testing.assert_allclose(np.array([[1.0, 0.0, 0.0]]) @ basis.N, 0.0, atol=1e-15)
        np.testing.assert_allclose(basis.N.T @ basis.N, np.eye(2), atol=1e-12)

    def test_zero_matrix_keeps_full_space(self):
        basis = nullspace_basis(np.zeros((2, 3)))
        assert basis.rank == 0
        assert basis.n_r == 3

    def test_empty_matrix(self):
        basis = nullspace_basis(np.zeros((0, 4)))
        np.testing.assert_array_equal(basis.N, np.eye(4))

    def test_dependent_rows(self):
        basis = nullspace_basis(np.array([[1.0, 1.0], [2.0, 2.0]]))
        assert basis.rank == 1
        assert basis.n_r == 1


class TestSolveSequential:
    """Tests for solve_sequential / solve_baseline."""

    def test_identity(self, identity_problem):
        solution = solve_sequential(identity_problem)
        np.testing.assert_allclose(solution.x, [1.0, -2.0, 0.5], atol=1e-12)
        np.testing.assert_allclose(solution.per_level_objective, [0.0], atol=1e-24)

    def test_orthogonal_levels(self, orthogonal_problem):
        solution = solve_sequential(orthogonal_problem)
        np.testing.assert_allclose(solution.x, [1.0, 2.0], atol=1e-12)

    def test_frozen_level_exits_early(self, frozen_problem):
        report = solve_baseline(frozen_problem)
        assert report.status == "converged"
        assert report.terminated_at_level == 1
        assert report.iterations == 1
        np.testing.assert_allclose(report.solution.x, [1.0], atol=1e-12)
        np.testing.assert_allclose(report.objectives, [0.0, 8.0], atol=1e-12)

    def test_all_levels_processed(self, orthogonal_problem):
        report = solve_baseline(orthogonal_problem)
        assert report.terminated_at_level is None
        assert report.iterations == 2

    def test_upper_level_keeps_its_optimum(self, tall_problem):
        solution = solve_sequential(tall_problem)
        A1, b1 = tall_problem.levels[0].A, tall_problem.levels[0].b
        x1, *_ = np.linalg.lstsq(A1, b1, rcond=None)
        np.testing.assert_allclose(solution.x, x1, atol=1e-12)

    def test_lower_level_moves_inside_nullspace(self):
        # level 1 fixes x0 + x1 = 2; level 2 wants x = (3, 0)
        problem = HlspProblem.from_arrays([[[1.0, 1.0]], np.eye(2)], [[2.0], [3.0, 0.0]])
        solution = solve_sequential(problem)
        np.testing.assert_allclose(solution.x, [2.5, -0.5], atol=1e-12)

    def test_rank_deficient_first_level_is_feasible(self):
        problem = generate_random_hierarchy(4, seed=13)
        solution = solve_sequential(problem)
        assert solution.per_level_objective[0] == pytest.approx(0.0, abs=1e-20)

    def test_multipliers_satisfy_stationarity(self, full_rank_problem):
        problem = full_rank_problem(4)
        solution = solve_sequential(problem)
        lam, worst = reconstruct_multipliers(problem, solution.x)
        assert [block.shape[0] for block in lam] == [1, 3]
        assert worst < 1e-8
        assert solution.kkt_residual == pytest.approx(worst)

    def test_empty_hierarchy(self):
        with pytest.raises(EmptyHierarchyError):
            solve_sequential(HlspProblem(levels=[], n_x=2))
