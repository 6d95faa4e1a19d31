"""Problem and solution models for equality-constrained hierarchies.

A hierarchy is an ordered list of priority levels. Level ``l`` holds a
dense matrix ``A_l`` (m_l x n_x) and a vector ``b_l``; all levels share
the variable count ``n_x``. Levels are numbered from 1 in docstrings and
log events, and indexed from 0 in Python lists.
"""

from typing import Any, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator


def _as_matrix(value: Any) -> np.ndarray:
    matrix = np.array(value, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1)
    return matrix


def _as_vector(value: Any) -> np.ndarray:
    return np.array(value, dtype=float).reshape(-1)


class LevelData(BaseModel):
    """One priority level: constraints ``A x - b = v``."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    A: np.ndarray
    b: np.ndarray

    @field_validator("A", mode="before")
    @classmethod
    def _coerce_matrix(cls, value: Any) -> np.ndarray:
        return _as_matrix(value)

    @field_validator("b", mode="before")
    @classmethod
    def _coerce_vector(cls, value: Any) -> np.ndarray:
        return _as_vector(value)

    @field_serializer("A", "b")
    def _serialize_array(self, value: np.ndarray) -> list:
        return value.tolist()

    @property
    def m(self) -> int:
        return int(self.A.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.A.shape[1]) if self.A.ndim == 2 else 0

    @property
    def b_hat(self) -> np.ndarray:
        """Half of ``b``, the centre shift of the level's duality constraint."""
        return 0.5 * self.b

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LevelData):
            return NotImplemented
        return (
            self.A.shape == other.A.shape
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.b, other.b)
        )


class HlspProblem(BaseModel):
    """Ordered stack of priority levels over ``n_x`` shared variables."""

    levels: List[LevelData]
    n_x: int

    @classmethod
    def from_arrays(
        cls,
        matrices: Sequence[Any],
        vectors: Sequence[Any],
        n_x: Optional[int] = None,
    ) -> "HlspProblem":
        """Build a problem from parallel lists of matrices and vectors."""
        levels = [LevelData(A=A, b=b) for A, b in zip(matrices, vectors)]
        if n_x is None:
            n_x = levels[0].n_cols if levels else 0
        return cls(levels=levels, n_x=n_x)

    @property
    def p(self) -> int:
        return len(self.levels)

    @property
    def level_sizes(self) -> List[int]:
        return [level.m for level in self.levels]

    @property
    def total_rows(self) -> int:
        return sum(self.level_sizes)

    def dual_dimension(self, level: int) -> int:
        """Cumulative row count of all levels above ``level`` (1-based)."""
        return sum(self.level_sizes[: level - 1])

    def stacked_A(self, upto: Optional[int] = None) -> np.ndarray:
        """Vertical stack of ``A_1 .. A_upto`` (all levels by default)."""
        levels = self.levels if upto is None else self.levels[:upto]
        if not levels:
            return np.zeros((0, self.n_x))
        return np.vstack([level.A for level in levels])

    def stacked_b(self, upto: Optional[int] = None) -> np.ndarray:
        levels = self.levels if upto is None else self.levels[:upto]
        if not levels:
            return np.zeros(0)
        return np.concatenate([level.b for level in levels])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HlspProblem):
            return NotImplemented
        return self.n_x == other.n_x and self.levels == other.levels


class HlspSolution(BaseModel):
    """Primal-dual solution of a hierarchy.

    ``lam`` holds the primal-dual blocks of levels 2 .. p-1; the block of
    level ``l`` is ``lam[l - 2]`` and has length ``n_l^dual``.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, populate_by_name=True)

    x: np.ndarray
    v: List[np.ndarray]
    lam: List[np.ndarray] = Field(default_factory=list, alias="lambda")
    per_level_objective: np.ndarray
    kkt_residual: float = Field(default=0.0, ge=0.0)

    @field_validator("x", "per_level_objective", mode="before")
    @classmethod
    def _coerce_vector(cls, value: Any) -> np.ndarray:
        return _as_vector(value)

    @field_validator("v", "lam", mode="before")
    @classmethod
    def _coerce_blocks(cls, value: Any) -> List[np.ndarray]:
        return [_as_vector(block) for block in value]

    @field_serializer("x", "per_level_objective")
    def _serialize_vector(self, value: np.ndarray) -> list:
        return value.tolist()

    @field_serializer("v", "lam")
    def _serialize_blocks(self, value: List[np.ndarray]) -> list:
        return [block.tolist() for block in value]

    @classmethod
    def from_primal(
        cls,
        problem: HlspProblem,
        x: np.ndarray,
        lam: Optional[List[np.ndarray]] = None,
        kkt_residual: float = 0.0,
    ) -> "HlspSolution":
        """Recompute slacks and objectives from ``x`` on ``problem``."""
        x = np.asarray(x, dtype=float)
        v = [level.A @ x - level.b for level in problem.levels]
        objective = np.array([0.5 * float(block @ block) for block in v])
        return cls(
            x=x,
            v=v,
            lam=lam if lam is not None else [],
            per_level_objective=objective,
            kkt_residual=kkt_residual,
        )
