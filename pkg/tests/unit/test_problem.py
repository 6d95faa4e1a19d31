"""Unit tests for problem models, validation, generation and objectives."""

import numpy as np
import pytest

from src.hlsp_dual.core.problem import (
    duality_gap_per_level,
    generate_random_hierarchy,
    is_valid,
    objective_per_level,
    validate_problem,
)
from src.hlsp_dual.errors import (
    DimensionMismatchError,
    EmptyHierarchyError,
    HlspError,
    InvalidParameterError,
    NonFiniteEntryError,
)
from src.hlsp_dual.models.problem import HlspProblem, HlspSolution, LevelData


# ============================================================================
# Models
# ============================================================================


class TestProblemModel:
    """Tests for HlspProblem and LevelData."""

    def test_vector_row_is_promoted_to_matrix(self):
        level = LevelData(A=[1.0, 2.0], b=[3.0])
        assert level.A.shape == (1, 2)
        assert level.m == 1

    def test_b_hat_is_half_of_b(self):
        level = LevelData(A=[[1.0]], b=[4.0])
        assert level.b_hat[0] == pytest.approx(2.0)

    def test_dual_dimension_counts_rows_above(self, tall_problem):
        assert tall_problem.dual_dimension(1) == 0
        assert tall_problem.dual_dimension(2) == 3

    def test_stacked_blocks(self, tall_problem):
        assert tall_problem.stacked_A(1).shape == (3, 2)
        assert tall_problem.stacked_A().shape == (5, 2)
        assert tall_problem.stacked_b(0).shape == (0,)

    def test_json_round_trip(self, tall_problem):
        payload = tall_problem.model_dump(mode="json")
        assert HlspProblem.model_validate(payload) == tall_problem

    def test_solution_from_primal_recomputes_slacks(self, frozen_problem):
        solution = HlspSolution.from_primal(frozen_problem, np.array([1.0]))
        assert solution.v[1][0] == pytest.approx(-4.0)
        np.testing.assert_allclose(solution.per_level_objective, [0.0, 8.0])

    def test_solution_accepts_lambda_alias(self):
        solution = HlspSolution(x=[0.0], v=[[0.0]], per_level_objective=[0.0], **{"lambda": [[1.0]]})
        assert solution.lam[0][0] == 1.0


# ============================================================================
# Validation
# ============================================================================


class TestValidateProblem:
    """Tests for validate_problem."""

    def test_valid_problem(self, tall_problem):
        assert validate_problem(tall_problem).valid
        assert is_valid(tall_problem)

    def test_empty_hierarchy(self):
        with pytest.raises(EmptyHierarchyError):
            validate_problem(HlspProblem(levels=[], n_x=2))

    def test_column_mismatch(self):
        problem = HlspProblem(levels=[LevelData(A=[[1.0, 2.0, 3.0]], b=[1.0])], n_x=2)
        with pytest.raises(DimensionMismatchError):
            validate_problem(problem)

    def test_b_length_mismatch_without_raising(self):
        problem = HlspProblem(levels=[LevelData(A=[[1.0, 2.0]], b=[1.0, 2.0])], n_x=2)
        verdict = validate_problem(problem, raise_on_error=False)
        assert not verdict.valid
        assert verdict.code == "dimension-mismatch"
        assert not is_valid(problem)

    def test_non_finite_entry(self):
        problem = HlspProblem.from_arrays([[[1.0, np.nan]]], [[1.0]])
        with pytest.raises(NonFiniteEntryError):
            validate_problem(problem)

    def test_errors_are_runtime_errors(self):
        assert issubclass(NonFiniteEntryError, HlspError)
        assert issubclass(HlspError, RuntimeError)


# ============================================================================
# Generator
# ============================================================================


class TestGenerateRandomHierarchy:
    """Tests for the randomized benchmark generator."""

    def test_shapes(self):
        problem = generate_random_hierarchy(4, seed=3)
        assert problem.n_x == 4
        assert problem.level_sizes == [1, 2, 3, 4]
        assert validate_problem(problem).valid

    def test_same_seed_same_problem(self):
        assert generate_random_hierarchy(5, seed=9) == generate_random_hierarchy(5, seed=9)

    def test_different_seed_differs(self):
        assert generate_random_hierarchy(3, seed=1) != generate_random_hierarchy(3, seed=2)

    def test_dependent_rows_lower_the_rank(self):
        problem = generate_random_hierarchy(4, seed=5)
        # level 4: 2 free rows, 2 dependent ones
        s = np.linalg.svd(problem.levels[3].A, compute_uv=False)
        assert s[2] < 1e-9 * s[0]

    def test_full_rank_flag(self):
        problem = generate_random_hierarchy(4, seed=5, full_rank=True)
        assert np.linalg.matrix_rank(problem.levels[3].A) == 4

    def test_feasible_flag_gives_consistent_levels(self):
        problem = generate_random_hierarchy(3, seed=8, full_rank=True, feasible=True)
        x0, *_ = np.linalg.lstsq(problem.stacked_A(), problem.stacked_b(), rcond=None)
        np.testing.assert_allclose(problem.stacked_A() @ x0, problem.stacked_b(), atol=1e-9)

    def test_invalid_p(self):
        with pytest.raises(InvalidParameterError):
            generate_random_hierarchy(0, seed=1)


# ============================================================================
# Objectives and duality gap
# ============================================================================


class TestObjectives:
    """Tests for objective_per_level and duality_gap_per_level."""

    def test_orthogonal_levels(self, orthogonal_problem):
        np.testing.assert_allclose(objective_per_level(orthogonal_problem, np.array([1.0, 2.0])), [0.0, 0.0])

    def test_frozen_level(self, frozen_problem):
        np.testing.assert_allclose(objective_per_level(frozen_problem, np.array([1.0])), [0.0, 8.0])

    def test_wrong_x_length(self, frozen_problem):
        with pytest.raises(DimensionMismatchError):
            objective_per_level(frozen_problem, np.zeros(2))

    def test_gap_vanishes_on_feasible_levels(self, orthogonal_problem):
        solution = HlspSolution.from_primal(orthogonal_problem, np.array([1.0, 2.0]))
        np.testing.assert_allclose(duality_gap_per_level(orthogonal_problem, solution), [0.0])

    def test_gap_has_one_entry_per_upper_level(self, tall_problem):
        solution = HlspSolution.from_primal(tall_problem, np.zeros(2))
        assert duality_gap_per_level(tall_problem, solution).shape == (1,)
