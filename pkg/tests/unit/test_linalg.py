"""Unit tests for the dense kernels."""

import numpy as np
import pytest

from src.hlsp_dual.core.linalg import (
    BlockInverseCache,
    build_block_inverses,
    cubic_real_roots,
    extend_block_inverse,
    largest_real_root_monic,
    ruiz_equilibrate,
    sym_factorize,
    sym_solve,
)
from src.hlsp_dual.errors import (
    AllCoefficientsZeroError,
    DimensionMismatchError,
    NotPositiveDefiniteError,
    SchurNotInvertibleError,
)


def _spd(rng, n):
    B = rng.standard_normal((n, n))
    return B @ B.T + n * np.eye(n)


class TestSymmetricFactor:
    """Tests for sym_factorize / sym_solve."""

    def test_reconstructs_matrix(self, rng):
        K = _spd(rng, 6)
        factor = sym_factorize(K)
        np.testing.assert_allclose(factor.reconstruct(), K, rtol=1e-12, atol=1e-12)
        assert np.all(factor.d > 0)
        np.testing.assert_allclose(np.diag(factor.L), np.ones(6))

    def test_solve(self, rng):
        K = _spd(rng, 5)
        rhs = rng.standard_normal(5)
        np.testing.assert_allclose(K @ sym_solve(sym_factorize(K), rhs), rhs, atol=1e-10)

    def test_diagonal_example(self):
        factor = sym_factorize(np.diag([4.0, 9.0]))
        np.testing.assert_allclose(factor.d, [4.0, 9.0])
        np.testing.assert_allclose(sym_solve(factor, np.array([8.0, 9.0])), [2.0, 1.0])

    def test_indefinite_matrix(self):
        with pytest.raises(NotPositiveDefiniteError):
            sym_factorize(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_singular_matrix(self):
        with pytest.raises(NotPositiveDefiniteError):
            sym_factorize(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_non_square(self):
        with pytest.raises(DimensionMismatchError):
            sym_factorize(np.ones((2, 3)))

    def test_rhs_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            sym_solve(sym_factorize(np.eye(2)), np.ones(3))


class TestBlockInverse:
    """Tests for the recursive block inverse."""

    def test_extension_matches_direct_inverse(self, rng):
        cache = BlockInverseCache()
        sizes = [1, 2, 3]
        for m in sizes:
            n = cache.dimension
            T = rng.standard_normal((m, n)) * 0.1
            U = _spd(rng, m)
            cache = extend_block_inverse(cache, T, U)
        for l in range(1, len(sizes) + 1):
            M = cache.assemble(l)
            np.testing.assert_allclose(cache.inverse(l) @ M, np.eye(M.shape[0]), atol=1e-10)

    def test_build_for_constraint_stack(self, rng):
        matrices = [rng.standard_normal((m, 4)) for m in (1, 2, 3)]
        cache = build_block_inverses(matrices, rho_eta=10.0, rho_eps=1.0, depth=3)
        stacked = np.vstack(matrices)
        M = 10.0 * stacked @ stacked.T + np.eye(stacked.shape[0])
        np.testing.assert_allclose(cache.inverse(3), np.linalg.inv(M), rtol=1e-8, atol=1e-10)
        assert cache.depth == 3

    def test_rank_deficient_stack_is_regularized(self):
        A = np.array([[1.0, 0.0]])
        cache = build_block_inverses([A, A], rho_eta=1.0, rho_eps=1.0, depth=2)
        assert np.all(np.isfinite(cache.inverse(2)))

    def test_schur_failure(self):
        cache = extend_block_inverse(BlockInverseCache(), np.zeros((1, 0)), np.eye(1))
        with pytest.raises(SchurNotInvertibleError):
            extend_block_inverse(cache, np.array([[2.0]]), np.array([[1.0]]))

    def test_shape_mismatch(self):
        cache = extend_block_inverse(BlockInverseCache(), np.zeros((1, 0)), np.eye(1))
        with pytest.raises(DimensionMismatchError):
            extend_block_inverse(cache, np.ones((1, 3)), np.eye(1))


class TestRuiz:
    """Tests for ruiz_equilibrate."""

    def test_unit_norms(self, rng):
        A = rng.standard_normal((5, 4)) * np.array([1e3, 1.0, 1e-2, 10.0])
        D_r, D_c = ruiz_equilibrate(A, iterations=50)
        scaled = np.abs(D_r[:, None] * A * D_c[None, :])
        np.testing.assert_allclose(scaled.max(axis=1), 1.0, atol=1e-2)
        np.testing.assert_allclose(scaled.max(axis=0), 1.0, atol=1e-2)

    def test_zero_rows_keep_unit_scaling(self):
        A = np.array([[0.0, 0.0], [2.0, 8.0]])
        D_r, D_c = ruiz_equilibrate(A)
        assert D_r[0] == 1.0
        assert np.all(D_c > 0)

    def test_already_balanced(self):
        D_r, D_c = ruiz_equilibrate(np.eye(3))
        np.testing.assert_array_equal(D_r, np.ones(3))
        np.testing.assert_array_equal(D_c, np.ones(3))


class TestCubicRoots:
    """Tests for cubic_real_roots (coefficients in ascending order)."""

    def test_three_real_roots(self):
        # (t - 1)(t - 2)(t - 3) = -6 + 11 t - 6 t^2 + t^3
        np.testing.assert_allclose(cubic_real_roots(-6.0, 11.0, -6.0, 1.0), [1.0, 2.0, 3.0], atol=1e-12)

    def test_single_real_root(self):
        # t^3 + t + 2 = (t + 1)(t^2 - t + 2)
        np.testing.assert_allclose(cubic_real_roots(2.0, 1.0, 0.0, 1.0), [-1.0], atol=1e-12)

    def test_triple_root(self):
        # (t - 2)^3
        np.testing.assert_allclose(cubic_real_roots(-8.0, 12.0, -6.0, 1.0), [2.0], atol=1e-6)

    def test_quadratic_fallback(self):
        # t^2 - 1
        np.testing.assert_allclose(cubic_real_roots(-1.0, 0.0, 1.0, 0.0), [-1.0, 1.0], atol=1e-12)

    def test_linear_fallback(self):
        assert cubic_real_roots(4.0, -2.0, 0.0, 0.0) == [2.0]

    def test_constant_has_no_roots(self):
        assert cubic_real_roots(3.0, 0.0, 0.0, 0.0) == []

    def test_all_zero(self):
        with pytest.raises(AllCoefficientsZeroError):
            cubic_real_roots(0.0, 0.0, 0.0, 0.0)

    def test_random_cubics_have_small_residuals(self, rng):
        for _ in range(200):
            e = rng.standard_normal(4)
            for root in cubic_real_roots(*e):
                value = e[0] + e[1] * root + e[2] * root**2 + e[3] * root**3
                scale = sum(abs(c) * max(1.0, abs(root)) ** k for k, c in enumerate(e))
                assert abs(value) <= 1e-8 * scale


class TestLargestRealRoot:
    """Tests for the vectorized largest root of monic cubics."""

    def test_known_roots(self):
        # (s-1)(s-2)(s-3), s^3 - 8, s^3 + s + 2 = (s+1)(s^2-s+2)
        roots = largest_real_root_monic([-6.0, 0.0, 0.0], [11.0, 0.0, 1.0], [-6.0, -8.0, 2.0])
        np.testing.assert_allclose(roots, [3.0, 2.0, -1.0], atol=1e-12)

    def test_triple_root(self):
        # (s - 1)^3
        assert largest_real_root_monic(-3.0, 3.0, -1.0) == pytest.approx(1.0, abs=1e-4)

    def test_matches_companion_eigenvalues(self, rng):
        coefficients = 3.0 * rng.standard_normal((500, 3))
        roots = largest_real_root_monic(*coefficients.T)
        checked = 0
        for (a2, a1, a0), root in zip(coefficients, roots):
            all_roots = np.roots([1.0, a2, a1, a0])
            real = np.sort(all_roots[np.abs(all_roots.imag) < 1e-9].real)
            others = np.delete(all_roots, np.argmin(np.abs(all_roots - real[-1])))
            if np.min(np.abs(others - real[-1])) < 1e-3:
                continue
            assert root == pytest.approx(real[-1], rel=1e-8, abs=1e-8)
            checked += 1
        assert checked > 450
