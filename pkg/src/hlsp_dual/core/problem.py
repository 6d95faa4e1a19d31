"""Problem validation, randomized generation and objective evaluation.

The generator follows the evaluation protocol used throughout the
benchmarks: ``p`` levels over ``n_x = p`` variables, level ``l`` holding
``l`` randomized equality constraints of which half are (numerically)
linearly dependent on the others.
"""

import math
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel

from ..errors import (
    DimensionMismatchError,
    EmptyHierarchyError,
    HlspError,
    InvalidParameterError,
    NonFiniteEntryError,
)
from ..logging_config import get_logger
from ..models.problem import HlspProblem, HlspSolution, LevelData

logger = get_logger("core.problem")

DEPENDENT_ROW_NOISE = 1e-12

ViolationCode = Literal["dimension-mismatch", "non-finite-entry", "empty-hierarchy"]


class ValidationVerdict(BaseModel):
    valid: bool
    code: Optional[ViolationCode] = None
    message: Optional[str] = None


_ERRORS = {
    "dimension-mismatch": DimensionMismatchError,
    "non-finite-entry": NonFiniteEntryError,
    "empty-hierarchy": EmptyHierarchyError,
}


def _first_violation(problem: HlspProblem) -> Optional[ValidationVerdict]:
    if problem.p == 0:
        return ValidationVerdict(
            valid=False, code="empty-hierarchy", message="hierarchy has no levels"
        )
    if problem.n_x < 1:
        return ValidationVerdict(
            valid=False,
            code="dimension-mismatch",
            message=f"n_x must be positive, got {problem.n_x}",
        )

    for index, level in enumerate(problem.levels, start=1):
        if level.A.ndim != 2 or level.m < 1:
            return ValidationVerdict(
                valid=False,
                code="dimension-mismatch",
                message=f"level {index}: A must be a matrix with at least one row",
            )
        if level.n_cols != problem.n_x:
            return ValidationVerdict(
                valid=False,
                code="dimension-mismatch",
                message=f"level {index}: A has {level.n_cols} columns, expected {problem.n_x}",
            )
        if level.b.shape[0] != level.m:
            return ValidationVerdict(
                valid=False,
                code="dimension-mismatch",
                message=f"level {index}: b has {level.b.shape[0]} entries, A has {level.m} rows",
            )
        if not (np.all(np.isfinite(level.A)) and np.all(np.isfinite(level.b))):
            return ValidationVerdict(
                valid=False,
                code="non-finite-entry",
                message=f"level {index}: A or b contains a non-finite entry",
            )
    return None


def validate_problem(problem: HlspProblem, raise_on_error: bool = True) -> ValidationVerdict:
    """Check the structural invariants of a hierarchy.

    Args:
        problem: Problem to check.
        raise_on_error: Raise the matching ``HlspError`` subclass on the first
            violation instead of returning a negative verdict.

    Returns:
        The verdict; ``valid`` is True iff every invariant holds.
    """
    violation = _first_violation(problem)
    if violation is None:
        return ValidationVerdict(valid=True)
    if raise_on_error:
        raise _ERRORS[violation.code](violation.message)
    return violation


def generate_random_hierarchy(
    p: int,
    seed: int,
    full_rank: bool = False,
    feasible: bool = False,
) -> HlspProblem:
    """Randomized hierarchy with ``n_x = p`` and ``m_l = l``.

    Entries of ``A`` and ``b`` are standard normal. On each level with more
    than one row, the last ``ceil(m_l / 2)`` rows are replaced by random
    combinations of the remaining rows plus uniform noise of magnitude
    ``DEPENDENT_ROW_NOISE``.

    Args:
        p: Number of levels.
        seed: Seed of the generator; equal seeds give bit-identical problems.
        full_rank: Skip the dependent-row substitution.
        feasible: Set ``b_l = A_l x0`` for one random ``x0`` so every level is
            satisfiable.
    """
    if p < 1:
        raise InvalidParameterError(f"p must be at least 1, got {p}")

    rng = np.random.default_rng(seed)
    n_x = p
    x0 = rng.standard_normal(n_x) if feasible else None

    levels: List[LevelData] = []
    for m in range(1, p + 1):
        A = rng.standard_normal((m, n_x))
        if not full_rank and m > 1:
            n_dependent = math.ceil(m / 2)
            n_free = m - n_dependent
            weights = rng.standard_normal((n_dependent, n_free))
            noise = rng.uniform(-1.0, 1.0, size=(n_dependent, n_x)) * DEPENDENT_ROW_NOISE
            A[n_free:] = weights @ A[:n_free] + noise
        b = A @ x0 if x0 is not None else rng.standard_normal(m)
        levels.append(LevelData(A=A, b=b))

    problem = HlspProblem(levels=levels, n_x=n_x)
    logger.debug(
        "problem_generated",
        p=p,
        seed=seed,
        full_rank=full_rank,
        feasible=feasible,
        rows=problem.total_rows,
    )
    return problem


def objective_per_level(problem: HlspProblem, x: np.ndarray) -> np.ndarray:
    """``[0.5 * ||A_l x - b_l||^2]`` for every level."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != problem.n_x:
        raise DimensionMismatchError(f"x has {x.shape[0]} entries, problem has n_x={problem.n_x}")
    objectives = np.empty(problem.p)
    for index, level in enumerate(problem.levels):
        residual = level.A @ x - level.b
        objectives[index] = 0.5 * float(residual @ residual)
    return objectives


def duality_gap_per_level(problem: HlspProblem, solution: HlspSolution) -> np.ndarray:
    """Weak-duality expression ``v_l^T (v_l + b_l) + lambda_l^T b_{<l}``.

    Evaluated for levels 1 .. p-1 with slacks recomputed from ``solution.x``.
    A feasible primal-dual pair gives non-positive values; zero means no gap.
    """
    gaps = np.zeros(max(problem.p - 1, 0))
    for index in range(problem.p - 1):
        level = problem.levels[index]
        v = level.A @ solution.x - level.b
        gap = float(v @ (v + level.b))
        if index >= 1 and index - 1 < len(solution.lam):
            gap += float(solution.lam[index - 1] @ problem.stacked_b(index))
        gaps[index] = gap
    return gaps


def is_valid(problem: HlspProblem) -> bool:
    try:
        return validate_problem(problem).valid
    except HlspError:
        return False
