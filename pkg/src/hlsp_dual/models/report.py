from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field

from .problem import HlspSolution

SolverName = Literal["dhadm", "dhipm", "baseline"]
SolveStatus = Literal["converged", "max_iters", "failed"]


class PhaseTimings(BaseModel):
    """Wall-clock milliseconds spent in each solver phase."""

    kkt: float = 0.0
    rhs: float = 0.0
    solve: float = 0.0
    lam: float = 0.0
    proj: float = 0.0
    roots: float = 0.0
    dual: float = 0.0

    def total(self) -> float:
        # roots is a sub-bucket of proj
        return self.kkt + self.rhs + self.solve + self.lam + self.proj + self.dual

    def shares(self) -> Dict[str, float]:
        """Percentage of the accounted time spent in each bucket."""
        total = self.total()
        if total <= 0.0:
            return {name: 0.0 for name in type(self).model_fields}
        return {name: 100.0 * getattr(self, name) / total for name in type(self).model_fields}


class SolveReport(BaseModel):
    """Result of one solver run on one problem."""

    solver: SolverName
    status: SolveStatus
    solution: HlspSolution
    iterations: int = 0
    residual_norm: float = 0.0
    refactor_count: int = 0
    wall_time_ms: float = 0.0
    timings: PhaseTimings = Field(default_factory=PhaseTimings)
    theta: List[float] = Field(default_factory=list)
    rho: Optional[float] = None
    duality_gap: List[float] = Field(default_factory=list)
    terminated_at_level: Optional[int] = None
    message: Optional[str] = None

    @property
    def objectives(self) -> List[float]:
        return [float(value) for value in self.solution.per_level_objective]
