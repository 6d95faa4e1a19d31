"""Unit tests for equilibration and the scaled-state mapping."""

import numpy as np
import pytest

from src.hlsp_dual.core.admm_state import AdmmState, scale_state, unscale_state
from src.hlsp_dual.core.preconditioner import EquilibrationScaling, precondition, unscale_solution
from src.hlsp_dual.core.problem import generate_random_hierarchy
from src.hlsp_dual.errors import DimensionMismatchError
from src.hlsp_dual.models.problem import HlspSolution


class TestPrecondition:
    """Tests for precondition / unscale_solution."""

    def test_scaled_levels_use_both_diagonals(self, tall_problem):
        scaled, scaling = precondition(tall_problem)
        for index, (original, level) in enumerate(zip(tall_problem.levels, scaled.levels), start=1):
            rows = scaling.row_scale(index)
            np.testing.assert_allclose(level.A, rows[:, None] * original.A * scaling.L_x[None, :])
            np.testing.assert_allclose(level.b, rows * original.b)

    def test_residuals_map_through_row_scaling(self, tall_problem, rng):
        scaled, scaling = precondition(tall_problem)
        x = rng.standard_normal(tall_problem.n_x)
        x_bar = scaling.scale_x(x)
        for index, (original, level) in enumerate(zip(tall_problem.levels, scaled.levels), start=1):
            np.testing.assert_allclose(
                level.A @ x_bar - level.b,
                scaling.row_scale(index) * (original.A @ x - original.b),
                atol=1e-12,
            )

    def test_unscale_solution_recomputes_objectives(self, tall_problem, rng):
        scaled, scaling = precondition(tall_problem)
        x = rng.standard_normal(tall_problem.n_x)
        scaled_solution = HlspSolution.from_primal(scaled, scaling.scale_x(x))
        solution = unscale_solution(scaled_solution, scaling, tall_problem)
        np.testing.assert_allclose(solution.x, x, atol=1e-12)
        expected = HlspSolution.from_primal(tall_problem, x)
        np.testing.assert_allclose(solution.per_level_objective, expected.per_level_objective, atol=1e-12)

    def test_identity_scaling(self, tall_problem):
        scaling = EquilibrationScaling.identity(tall_problem)
        assert scaling.is_identity
        assert scaling.L_nu(2).shape == (3,)
        assert scaling.L_nu(1).shape == (0,)

    def test_unscale_x_checks_length(self, tall_problem):
        scaling = EquilibrationScaling.identity(tall_problem)
        with pytest.raises(DimensionMismatchError):
            scaling.unscale_x(np.zeros(3))


class TestAdmmStateScaling:
    """Tests for scale_state / unscale_state and dimension checks."""

    def _random_state(self, problem, rng):
        state = AdmmState.zeros(problem, rho=0.3)
        state.x = rng.standard_normal(problem.n_x)
        state.x_tilde = rng.standard_normal(problem.n_x)
        state.mu = [rng.standard_normal(mu.shape[0]) for mu in state.mu]
        state.eta = [rng.standard_normal(eta.shape[0]) for eta in state.eta]
        state.lam = [rng.standard_normal(lam.shape[0]) for lam in state.lam]
        state.nu = [rng.standard_normal(nu.shape[0]) for nu in state.nu]
        return state

    def test_unscale_inverts_scale(self, rng):
        problem = generate_random_hierarchy(4, seed=6)
        _, scaling = precondition(problem)
        state = self._random_state(problem, rng)
        back = unscale_state(scale_state(state, scaling), scaling)
        np.testing.assert_allclose(back.x, state.x, atol=1e-12)
        for name in ("mu", "eta", "lam", "nu"):
            for own, ref in zip(getattr(back, name), getattr(state, name)):
                np.testing.assert_allclose(own, ref, atol=1e-12)

    def test_scaling_does_not_alias_input(self, rng):
        problem = generate_random_hierarchy(3, seed=6)
        _, scaling = precondition(problem)
        state = self._random_state(problem, rng)
        x_before = state.x.copy()
        scaled = scale_state(state, scaling)
        scaled.x[:] = 0.0
        np.testing.assert_array_equal(state.x, x_before)

    def test_zeros_block_counts(self):
        state = AdmmState.zeros(generate_random_hierarchy(4, seed=1), rho=1.0)
        assert len(state.v) == 4
        assert len(state.z) == 3
        assert len(state.lam) == 2
        assert [lam.shape[0] for lam in state.lam] == [1, 3]

    def test_check_dimensions_rejects_other_problem(self):
        state = AdmmState.zeros(generate_random_hierarchy(3, seed=1), rho=1.0)
        with pytest.raises(DimensionMismatchError):
            state.check_dimensions(generate_random_hierarchy(4, seed=1))
