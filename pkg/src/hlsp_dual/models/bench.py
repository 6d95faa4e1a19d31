from typing import List, Optional

from pydantic import BaseModel, Field, model_validator

from .report import SolveStatus, SolverName


class ExperimentConfig(BaseModel):
    """Sweep over level counts, repetitions and solvers."""

    p_min: int = Field(default=1, ge=1)
    p_max: int = Field(default=10, ge=1)
    reps: int = Field(default=100, ge=1)
    seed: int = 0
    solvers: List[SolverName] = Field(default_factory=lambda: ["dhadm", "dhipm", "baseline"])
    full_rank: bool = False

    # Tolerance overrides; None keeps the solver defaults.
    admm_chi: Optional[float] = Field(default=None, gt=0)
    admm_max_iters: Optional[int] = Field(default=None, ge=1)
    ipm_chi: Optional[float] = Field(default=None, gt=0)

    threads: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_range(self) -> "ExperimentConfig":
        if self.p_max < self.p_min:
            raise ValueError("p_max must be >= p_min")
        if not self.solvers:
            raise ValueError("at least one solver is required")
        return self


class BenchRecord(BaseModel):
    """One (p, rep, solver) cell of a benchmark suite."""

    p: int
    solver: SolverName
    seed: int
    status: SolveStatus
    time_ms: float = 0.0
    iters: int = 0
    residual: float = 0.0
    objectives: List[float] = Field(default_factory=list)
    refactors: int = 0
    t_kkt: float = 0.0
    t_rhs: float = 0.0
    t_solve: float = 0.0
    t_lambda: float = 0.0
    t_proj: float = 0.0
    t_dual: float = 0.0
    message: Optional[str] = None


class BenchSummary(BaseModel):
    """Medians of one (p, solver) group of a suite."""

    p: int
    solver: SolverName
    runs: int
    failures: int = 0
    median_time_ms: float = 0.0
    median_iters: float = 0.0
    median_residual: float = 0.0
    max_objective_gap: Optional[float] = None
