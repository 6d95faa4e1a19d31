"""Dense kernels shared by the solvers.

- Symmetric positive-definite factorization and solve, stored as LDL^T
  (obtained from a Cholesky factor, no pivoting).
- Recursive block inversion of the nested dual diagonal blocks ``M_l``.
- Ruiz row/column equilibration.
- Closed-form real roots of cubic polynomials, scalar and vectorized.
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import linalg as sla

from ..errors import (
    AllCoefficientsZeroError,
    DimensionMismatchError,
    NotPositiveDefiniteError,
    SchurNotInvertibleError,
)
from ..logging_config import get_logger

logger = get_logger("core.linalg")

PIVOT_TOL = 1e-13
CUBIC_DEGENERATE_TOL = 1e-14
RUIZ_DEFAULT_ITERATIONS = 15
RUIZ_DEFAULT_TOL = 1e-3


# ============================================================================
# Symmetric factorization
# ============================================================================


@dataclass(frozen=True)
class SymmetricFactor:
    """LDL^T factor of a symmetric positive-definite matrix.

    ``chol`` is the lower Cholesky factor C with K = C C^T, so that
    L = C diag(C)^-1 and D = diag(C)^2.
    """

    chol: np.ndarray

    @property
    def n(self) -> int:
        return int(self.chol.shape[0])

    @property
    def d(self) -> np.ndarray:
        return np.diag(self.chol) ** 2

    @property
    def L(self) -> np.ndarray:
        return self.chol / np.diag(self.chol)

    def reconstruct(self) -> np.ndarray:
        L = self.L
        return (L * self.d) @ L.T


def sym_factorize(K: np.ndarray) -> SymmetricFactor:
    """Factorize a symmetric positive-definite matrix.

    Raises:
        NotPositiveDefiniteError: If a pivot falls below
            ``PIVOT_TOL * max|K|`` or the factorization breaks down.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {K.shape}")
    if K.shape[0] == 0:
        return SymmetricFactor(chol=np.zeros((0, 0)))

    scale = float(np.max(np.abs(K)))
    try:
        chol = sla.cholesky(K, lower=True, check_finite=True)
    except (sla.LinAlgError, ValueError) as exc:
        raise NotPositiveDefiniteError(f"matrix is not positive definite: {exc}") from exc

    pivots = np.diag(chol) ** 2
    if scale == 0.0 or float(pivots.min()) <= PIVOT_TOL * scale:
        raise NotPositiveDefiniteError(
            f"pivot {float(pivots.min()):.3e} below tolerance {PIVOT_TOL * scale:.3e}"
        )
    return SymmetricFactor(chol=chol)


def sym_solve(factor: SymmetricFactor, rhs: np.ndarray) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != factor.n:
        raise DimensionMismatchError(
            f"right-hand side has {rhs.shape[0]} rows, factor has dimension {factor.n}"
        )
    if factor.n == 0:
        return rhs.copy()
    return sla.cho_solve((factor.chol, True), rhs)


# ============================================================================
# Recursive block inverse
# ============================================================================


@dataclass(frozen=True)
class BlockInverseCache:
    """Explicit inverses of the nested blocks M_1, M_2, ...

    ``M_l = [[M_{l-1}, T_l^T], [T_l, U_l]]``; ``inverses[k]`` holds
    ``M_{k+1}^-1``.
    """

    inverses: Tuple[np.ndarray, ...] = ()
    T_blocks: Tuple[np.ndarray, ...] = ()
    U_blocks: Tuple[np.ndarray, ...] = ()

    @property
    def dimension(self) -> int:
        return int(self.inverses[-1].shape[0]) if self.inverses else 0

    @property
    def depth(self) -> int:
        return len(self.inverses)

    def inverse(self, l: int) -> np.ndarray:
        """``M_l^-1`` (1-based)."""
        return self.inverses[l - 1]

    def assemble(self, l: int) -> np.ndarray:
        """Rebuild ``M_l`` from its stored blocks."""
        M = np.zeros((0, 0))
        for T, U in zip(self.T_blocks[:l], self.U_blocks[:l]):
            n, m = M.shape[0], U.shape[0]
            grown = np.zeros((n + m, n + m))
            grown[:n, :n] = M
            grown[n:, :n] = T
            grown[:n, n:] = T.T
            grown[n:, n:] = U
            M = grown
        return M


def extend_block_inverse(
    cache: BlockInverseCache, T: np.ndarray, U: np.ndarray
) -> BlockInverseCache:
    """Append ``M_l^-1`` using the Schur complement of the new block.

    Only ``U - T M_{l-1}^-1 T^T`` is factorized; the previous inverse is
    reused.

    Raises:
        DimensionMismatchError: If ``T`` does not match the cache dimension.
        SchurNotInvertibleError: If the Schur complement is not positive definite.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    m = U.shape[0]
    n = cache.dimension
    T = np.asarray(T, dtype=float)
    if T.size != m * n:
        raise DimensionMismatchError(
            f"T must have shape ({m}, {n}) to extend the cache, got {T.shape}"
        )
    T = T.reshape(m, n)
    if U.shape != (m, m):
        raise DimensionMismatchError(f"U must be square, got shape {U.shape}")

    if n == 0:
        P = np.zeros((0, m))
        schur = U
    else:
        P = cache.inverses[-1] @ T.T
        schur = U - T @ P
    schur = 0.5 * (schur + schur.T)

    try:
        schur_inv = sla.cho_solve(sla.cho_factor(schur, lower=True), np.eye(m))
    except (sla.LinAlgError, ValueError) as exc:
        raise SchurNotInvertibleError(
            f"Schur complement of block {cache.depth + 1} is not invertible: {exc}"
        ) from exc

    inverse = np.empty((n + m, n + m))
    if n:
        PS = P @ schur_inv
        inverse[:n, :n] = cache.inverses[-1] + PS @ P.T
        inverse[:n, n:] = -PS
        inverse[n:, :n] = -PS.T
    inverse[n:, n:] = schur_inv
    inverse = 0.5 * (inverse + inverse.T)

    return BlockInverseCache(
        inverses=cache.inverses + (inverse,),
        T_blocks=cache.T_blocks + (T,),
        U_blocks=cache.U_blocks + (U,),
    )


def build_block_inverses(
    matrices: List[np.ndarray], rho_eta: float, rho_eps: float, depth: int
) -> BlockInverseCache:
    """Build ``M_1^-1 .. M_depth^-1`` for ``M_k = rho_eta A_{<=k} A_{<=k}^T + rho_eps I``."""
    cache = BlockInverseCache()
    for k in range(depth):
        A_k = matrices[k]
        above = np.vstack(matrices[:k]) if k else np.zeros((0, A_k.shape[1]))
        T = rho_eta * A_k @ above.T
        U = rho_eta * A_k @ A_k.T + rho_eps * np.eye(A_k.shape[0])
        cache = extend_block_inverse(cache, T, U)

    logger.debug("block_inverses_built", depth=cache.depth, dimension=cache.dimension)
    return cache


# ============================================================================
# Ruiz equilibration
# ============================================================================


def ruiz_equilibrate(
    A: np.ndarray,
    iterations: int = RUIZ_DEFAULT_ITERATIONS,
    tol: float = RUIZ_DEFAULT_TOL,
) -> Tuple[np.ndarray, np.ndarray]:
    """Row and column scalings normalizing the infinity norms of ``A``.

    Returns:
        Tuple ``(D_r, D_c)`` of positive diagonal entries such that
        ``D_r[:, None] * A * D_c`` has rows and columns of unit infinity
        norm up to ``tol``. Zero rows and columns keep scaling 1.
    """
    A = np.asarray(A, dtype=float)
    D_r = np.ones(A.shape[0])
    D_c = np.ones(A.shape[1])

    for _ in range(iterations):
        scaled = np.abs(D_r[:, None] * A * D_c[None, :])
        row_norms = scaled.max(axis=1) if scaled.shape[1] else np.zeros(A.shape[0])
        col_norms = scaled.max(axis=0) if scaled.shape[0] else np.zeros(A.shape[1])

        deviation = 0.0
        if np.any(row_norms > 0):
            deviation = max(deviation, float(np.max(np.abs(1.0 - row_norms[row_norms > 0]))))
        if np.any(col_norms > 0):
            deviation = max(deviation, float(np.max(np.abs(1.0 - col_norms[col_norms > 0]))))
        if deviation <= tol:
            break

        row_norms[row_norms == 0.0] = 1.0
        col_norms[col_norms == 0.0] = 1.0
        D_r = D_r / np.sqrt(row_norms)
        D_c = D_c / np.sqrt(col_norms)

    return D_r, D_c


# ============================================================================
# Cubic roots
# ============================================================================


def _poly(coefficients: Tuple[float, float, float, float], theta: float) -> float:
    e1, e2, e3, e4 = coefficients
    return ((e4 * theta + e3) * theta + e2) * theta + e1


def _poly_derivative(coefficients: Tuple[float, float, float, float], theta: float) -> float:
    _, e2, e3, e4 = coefficients
    return (3.0 * e4 * theta + 2.0 * e3) * theta + e2


def _polish(coefficients: Tuple[float, float, float, float], theta: float) -> float:
    slope = _poly_derivative(coefficients, theta)
    if slope == 0.0 or not math.isfinite(slope):
        return theta
    candidate = theta - _poly(coefficients, theta) / slope
    if abs(_poly(coefficients, candidate)) < abs(_poly(coefficients, theta)):
        return candidate
    return theta


def _quadratic_roots(c0: float, c1: float, c2: float) -> List[float]:
    """Real roots of ``c0 + c1 t + c2 t^2`` with ``c2 != 0``."""
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc < 0.0:
        if disc > -CUBIC_DEGENERATE_TOL * max(c1 * c1, abs(4.0 * c2 * c0)):
            disc = 0.0
        else:
            return []
    root = math.sqrt(disc)
    q = -0.5 * (c1 + math.copysign(root, c1))
    if q == 0.0:
        return [0.0]
    return [q / c2, c0 / q]


def _dedupe(roots: List[float]) -> List[float]:
    unique: List[float] = []
    for theta in sorted(roots):
        if unique and abs(theta - unique[-1]) <= 1e-12 * max(1.0, abs(theta)):
            continue
        unique.append(theta)
    return unique


def cubic_real_roots(e1: float, e2: float, e3: float, e4: float) -> List[float]:
    """All real roots of ``e1 + e2 t + e3 t^2 + e4 t^3``, sorted.

    Falls back to the quadratic (then linear) case when the leading
    coefficients vanish relative to the largest one.

    Raises:
        AllCoefficientsZeroError: If every coefficient is zero.
    """
    coefficients = (float(e1), float(e2), float(e3), float(e4))
    scale = max(abs(c) for c in coefficients)
    if scale == 0.0:
        raise AllCoefficientsZeroError("cubic has all coefficients equal to zero")
    tiny = CUBIC_DEGENERATE_TOL * scale

    if abs(e4) <= tiny:
        if abs(e3) <= tiny:
            if abs(e2) <= tiny:
                return []
            return [-e1 / e2]
        roots = _quadratic_roots(e1, e2, e3)
        return _dedupe([_polish(coefficients, theta) for theta in roots])

    # Monic form t^3 + a t^2 + b t + c, depressed with t = s - a/3.
    a, b, c = e3 / e4, e2 / e4, e1 / e4
    a13 = a / 3.0
    f = b / 3.0 - a13 * a13
    g = a13 * (2.0 * a13 * a13 - b) + c
    h = 0.25 * g * g + f * f * f

    if f == 0.0 and g == 0.0:
        roots = [float(-np.cbrt(c))]
    elif h <= 0.0:
        j = math.sqrt(-f)
        k = math.acos(max(-1.0, min(1.0, -0.5 * g / (j * j * j))))
        roots = [2.0 * j * math.cos((k + 2.0 * math.pi * i) / 3.0) - a13 for i in range(3)]
    else:
        sqrt_h = math.sqrt(h)
        S = float(np.cbrt(-0.5 * g + sqrt_h))
        U = float(np.cbrt(-0.5 * g - sqrt_h))
        roots = [S + U - a13]

    return _dedupe([_polish(coefficients, theta) for theta in roots])


def largest_real_root_monic(a2: np.ndarray, a1: np.ndarray, a0: np.ndarray) -> np.ndarray:
    """Largest real root of ``s^3 + a2 s^2 + a1 s + a0``, element-wise.

    Vectorized over arrays of coefficients. Uses the trigonometric form
    when all three roots are real and the cancellation-free Cardano form
    otherwise; no Newton polish is applied.
    """
    a2, a1, a0 = np.broadcast_arrays(
        np.asarray(a2, dtype=float), np.asarray(a1, dtype=float), np.asarray(a0, dtype=float)
    )
    shift = a2 / 3.0
    p = a1 - a2 * shift
    q = shift * (2.0 * shift * shift - a1) + a0
    disc = 0.25 * q * q + (p / 3.0) ** 3

    with np.errstate(divide="ignore", invalid="ignore"):
        # one real root
        u = np.cbrt(-0.5 * q - np.copysign(np.sqrt(np.maximum(disc, 0.0)), q))
        cardano = u + np.where(u != 0.0, -p / (3.0 * u), 0.0)
        # three real roots, k = 0 branch is the largest
        negative_p = np.minimum(p, -np.finfo(float).tiny)
        radius = 2.0 * np.sqrt(-negative_p / 3.0)
        cosine = np.clip(1.5 * q / negative_p * np.sqrt(-3.0 / negative_p), -1.0, 1.0)
        trig = radius * np.cos(np.arccos(cosine) / 3.0)

    t = np.where((disc <= 0.0) & (p < 0.0), trig, cardano)
    return t - shift
