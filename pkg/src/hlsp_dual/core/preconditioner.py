"""Partial Ruiz equilibration of the constraint matrices.

Only the stacked constraint matrix is equilibrated: ``A_bar = V_mu A L_x``
and ``b_bar = V_mu b``. Every other scaling block follows from these two
diagonals:

- slacks ``v`` keep their units (``L_v = I``),
- the primal-dual block of level ``l`` is scaled by the leading
  ``n_l^dual`` entries of ``V_mu`` (``L_nu``),
- the ``eta`` multipliers reuse ``L_x``,
- the split constraints stay unscaled (``V_phi = V_nu = I``), which keeps
  the closed-form projection valid.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..errors import DimensionMismatchError
from ..logging_config import get_logger
from ..models.problem import HlspProblem, HlspSolution, LevelData
from .linalg import RUIZ_DEFAULT_ITERATIONS, ruiz_equilibrate
from .problem import validate_problem

logger = get_logger("core.preconditioner")


@dataclass(frozen=True)
class EquilibrationScaling:
    """Column scaling ``L_x`` and row scaling ``V_mu`` of the stacked matrix."""

    L_x: np.ndarray
    V_mu: np.ndarray
    level_sizes: Tuple[int, ...]

    @classmethod
    def identity(cls, problem: HlspProblem) -> "EquilibrationScaling":
        return cls(
            L_x=np.ones(problem.n_x),
            V_mu=np.ones(problem.total_rows),
            level_sizes=tuple(problem.level_sizes),
        )

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.L_x == 1.0) and np.all(self.V_mu == 1.0))

    def _offset(self, level: int) -> int:
        return sum(self.level_sizes[: level - 1])

    def row_scale(self, level: int) -> np.ndarray:
        """Block of ``V_mu`` belonging to ``level`` (1-based)."""
        start = self._offset(level)
        return self.V_mu[start : start + self.level_sizes[level - 1]]

    def L_nu(self, level: int) -> np.ndarray:
        """Scaling of the primal-dual block of ``level``: rows of all levels above."""
        return self.V_mu[: self._offset(level)]

    def scale_x(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) / self.L_x

    def unscale_x(self, x_bar: np.ndarray) -> np.ndarray:
        x_bar = np.asarray(x_bar, dtype=float)
        if x_bar.shape != self.L_x.shape:
            raise DimensionMismatchError(
                f"x has {x_bar.shape[0]} entries, scaling has {self.L_x.shape[0]}"
            )
        return self.L_x * x_bar

    def scale_lambda(self, level: int, lam: np.ndarray) -> np.ndarray:
        return np.asarray(lam, dtype=float) / self.L_nu(level)

    def unscale_lambda(self, level: int, lam_bar: np.ndarray) -> np.ndarray:
        lam_bar = np.asarray(lam_bar, dtype=float)
        scale = self.L_nu(level)
        if lam_bar.shape != scale.shape:
            raise DimensionMismatchError(
                f"lambda block of level {level} has {lam_bar.shape[0]} entries, expected {scale.shape[0]}"
            )
        return scale * lam_bar


def precondition(
    problem: HlspProblem, iterations: int = RUIZ_DEFAULT_ITERATIONS
) -> Tuple[HlspProblem, EquilibrationScaling]:
    """Equilibrate the stacked constraint matrix of ``problem``.

    Returns:
        The scaled problem (``A_bar``, ``b_bar`` per level) and the scaling.
    """
    validate_problem(problem)
    D_r, D_c = ruiz_equilibrate(problem.stacked_A(), iterations=iterations)
    scaling = EquilibrationScaling(L_x=D_c, V_mu=D_r, level_sizes=tuple(problem.level_sizes))

    levels: List[LevelData] = []
    for index, level in enumerate(problem.levels, start=1):
        rows = scaling.row_scale(index)
        levels.append(LevelData(A=rows[:, None] * level.A * D_c[None, :], b=rows * level.b))

    logger.debug(
        "problem_preconditioned",
        p=problem.p,
        col_scale_range=(float(D_c.min()), float(D_c.max())),
        row_scale_range=(float(D_r.min()), float(D_r.max())),
    )
    return HlspProblem(levels=levels, n_x=problem.n_x), scaling


def unscale_solution(
    solution: HlspSolution,
    scaling: EquilibrationScaling,
    problem: HlspProblem,
    kkt_residual: Optional[float] = None,
) -> HlspSolution:
    """Map a scaled-space solution back to the original ``problem``.

    ``x = L_x x_bar`` and each primal-dual block is multiplied by its
    ``L_nu``; slacks and objectives are recomputed on the original data.
    """
    x = scaling.unscale_x(solution.x)
    lam = [
        scaling.unscale_lambda(level, block)
        for level, block in enumerate(solution.lam, start=2)
    ]
    return HlspSolution.from_primal(
        problem,
        x,
        lam=lam,
        kkt_residual=solution.kkt_residual if kkt_residual is None else kkt_residual,
    )
