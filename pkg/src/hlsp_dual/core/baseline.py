"""Sequential primal solver by nullspace projection.

Levels are solved in priority order. Level ``l`` only moves ``x`` inside
the nullspace of every row processed so far, so higher levels keep their
optimum. The solver is the correctness oracle of the dual solvers.
"""

import time
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg as sla

from ..config import settings
from ..logging_config import get_logger
from ..models.problem import HlspProblem, HlspSolution
from ..models.report import SolveReport
from .problem import duality_gap_per_level, validate_problem

logger = get_logger("core.baseline")


@dataclass(frozen=True)
class NullspaceBasis:
    """Orthonormal basis ``N`` (n_x x n_r) of the numerical nullspace."""

    N: np.ndarray
    rank: int

    @property
    def n_r(self) -> int:
        return int(self.N.shape[1])


def nullspace_basis(stacked_rows: np.ndarray, tol: Optional[float] = None) -> NullspaceBasis:
    """Nullspace of ``stacked_rows`` at relative singular-value threshold ``tol``.

    Singular values below ``tol * s_max`` count as zero. A zero (or empty)
    matrix has the full space as nullspace.
    """
    tol = settings.rank_tol if tol is None else tol
    A = np.atleast_2d(np.asarray(stacked_rows, dtype=float))
    n = A.shape[1]
    if A.shape[0] == 0:
        return NullspaceBasis(N=np.eye(n), rank=0)

    _, s, Vt = sla.svd(A, full_matrices=True)
    s_max = float(s[0]) if s.size else 0.0
    rank = int(np.sum(s > tol * s_max)) if s_max > 0.0 else 0
    return NullspaceBasis(N=Vt[rank:].T.copy(), rank=rank)


def _min_norm_solve(M: np.ndarray, rhs: np.ndarray, cutoff: float) -> np.ndarray:
    """Minimum-norm least-squares solution ignoring singular values <= ``cutoff``."""
    if M.size == 0:
        return np.zeros(M.shape[1])
    U, s, Vt = sla.svd(M, full_matrices=False)
    keep = s > cutoff
    coefficients = (U[:, keep].T @ rhs) / s[keep]
    return Vt[keep].T @ coefficients


def reconstruct_multipliers(
    problem: HlspProblem, x: np.ndarray, tol: Optional[float] = None
) -> Tuple[List[np.ndarray], float]:
    """Primal-dual blocks from stationarity ``A_l^T v_l + A_{<l}^T lambda_l = 0``.

    Returns:
        The blocks of levels 2 .. p-1 (minimum-norm least-squares solutions)
        and the largest stationarity residual over levels 1 .. p-1.
    """
    tol = settings.rank_tol if tol is None else tol
    blocks: List[np.ndarray] = []
    worst = 0.0
    for index in range(problem.p - 1):
        level = problem.levels[index]
        v = level.A @ x - level.b
        gradient = level.A.T @ v
        if index == 0:
            worst = max(worst, float(np.linalg.norm(gradient)))
            continue
        above = problem.stacked_A(index)
        lam, *_ = sla.lstsq(above.T, -gradient, cond=tol)
        blocks.append(lam)
        worst = max(worst, float(np.linalg.norm(gradient + above.T @ lam)))
    return blocks, worst


def _run_sequential(
    problem: HlspProblem, tol: Optional[float]
) -> Tuple[HlspSolution, Optional[int]]:
    tol = settings.rank_tol if tol is None else tol
    validate_problem(problem)

    x = np.zeros(problem.n_x)
    basis = NullspaceBasis(N=np.eye(problem.n_x), rank=0)
    terminated_at: Optional[int] = None

    for index, level in enumerate(problem.levels):
        if basis.n_r == 0:
            terminated_at = index
            logger.debug("baseline_early_exit", level=index, p=problem.p)
            break

        projected = level.A @ basis.N
        residual = level.b - level.A @ x
        scale = float(np.linalg.norm(level.A, 2)) if level.A.size else 0.0
        z = _min_norm_solve(projected, residual, tol * max(scale, 1.0))
        x = x + basis.N @ z

        basis = nullspace_basis(problem.stacked_A(index + 1), tol)
        logger.debug(
            "baseline_level_solved",
            level=index + 1,
            rank=basis.rank,
            nullspace_dim=basis.n_r,
        )

    lam, stationarity = reconstruct_multipliers(problem, x, tol)
    solution = HlspSolution.from_primal(problem, x, lam=lam, kkt_residual=stationarity)
    return solution, terminated_at


def solve_sequential(problem: HlspProblem, tol: Optional[float] = None) -> HlspSolution:
    """Lexicographic least-squares solution of an equality-only hierarchy.

    Args:
        problem: Validated hierarchy.
        tol: Relative rank threshold (defaults to ``settings.rank_tol``).

    Returns:
        The solution with primal-dual blocks reconstructed by least squares.
        Processing stops early once the processed rows reach full rank.
    """
    solution, _ = _run_sequential(problem, tol)
    return solution


def solve_baseline(problem: HlspProblem, tol: Optional[float] = None) -> SolveReport:
    """Run :func:`solve_sequential` and wrap the result as a report."""
    start = time.perf_counter()
    solution, terminated_at = _run_sequential(problem, tol)
    elapsed_ms = 1000.0 * (time.perf_counter() - start)

    report = SolveReport(
        solver="baseline",
        status="converged",
        solution=solution,
        iterations=terminated_at if terminated_at is not None else problem.p,
        residual_norm=solution.kkt_residual,
        wall_time_ms=elapsed_ms,
        duality_gap=duality_gap_per_level(problem, solution).tolist(),
        terminated_at_level=terminated_at,
    )
    logger.info(
        "baseline_solve_finished",
        p=problem.p,
        terminated_at_level=terminated_at,
        wall_time_ms=round(elapsed_ms, 3),
    )
    return report
