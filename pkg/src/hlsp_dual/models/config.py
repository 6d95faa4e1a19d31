"""Solver configuration models."""

from typing import Literal

from pydantic import BaseModel, Field

from ..config import settings


class AdmmConfig(BaseModel):
    """Parameters of the ADMM solver.

    The constant pre-factors ``rho_mu .. rho_nu`` weight the four constraint
    groups; ``rho`` (starting at ``rho_init``) is the adaptive step size.

    Residuals are checked every ``check_every`` iterations. A refactorization
    needs at least ``refactor_gap`` iterations since the previous one, and
    the gap grows by ``refactor_gap_growth`` after each.
    """

    rho_init: float = Field(default=0.1, gt=0)
    sigma: float = Field(default=1e-6, gt=0)
    alpha: float = Field(default=1.6, gt=0, lt=2)
    chi: float = Field(default=1e-6, gt=0)
    max_iters: int = Field(default=50_000, ge=1)
    check_every: int = Field(default=10, ge=1)

    rho_mu: float = Field(default=100.0, gt=0)
    rho_eta: float = Field(default=10.0, gt=0)
    rho_phi: float = Field(default=1.0, gt=0)
    rho_nu: float = Field(default=1.0, gt=0)
    rho_eps: float | None = Field(default=None, gt=0)

    refactor_ratio: float = Field(default=5.0, gt=1)
    rho_min: float = Field(default=1e-6, gt=0)
    rho_max: float = Field(default=1e6, gt=0)
    adaptive_rho: bool = True
    refactor_gap: int = Field(default=25, ge=1)
    refactor_gap_growth: float = Field(default=2.0, ge=1)
    best_iterate_tol: float = Field(default=1e-2, ge=0)

    precondition: bool = True
    ruiz_iterations: int = Field(default=15, ge=0)
    projection: Literal["cubic", "ipm"] = "cubic"
    projection_tol: float = Field(default=1e-10, gt=0)

    log_every: int = Field(default=100, ge=1)
    raise_on_max_iters: bool = False

    @property
    def rho_eps_value(self) -> float:
        """Weight on the dual block diagonals; falls back to ``rho_nu``."""
        return self.rho_nu if self.rho_eps is None else self.rho_eps

    @classmethod
    def from_settings(cls, **overrides) -> "AdmmConfig":
        values = {"chi": settings.admm_chi, "max_iters": settings.admm_max_iters}
        values.update(overrides)
        return cls(**values)


class IpmConfig(BaseModel):
    """Parameters of the interior-point solver."""

    mu0: float = Field(default=1.0, gt=0)
    mu_factor: float = Field(default=0.1, gt=0, lt=1)
    mu_min: float = Field(default=1e-12, gt=0)
    sigma: float = Field(default=0.1, gt=0, le=1)
    tau: float = Field(default=0.995, gt=0, lt=1)
    chi: float = Field(default=1e-8, gt=0)
    max_iters: int = Field(default=200, ge=1)
    max_inner_iters: int = Field(default=25, ge=1)
    qc_relaxation: float = Field(default=1e-6, ge=0)
    regularization: float = Field(default=1e-10, ge=0)
    raise_on_max_iters: bool = False

    @classmethod
    def from_settings(cls, **overrides) -> "IpmConfig":
        values = {"chi": settings.ipm_chi, "max_iters": settings.ipm_max_iters}
        values.update(overrides)
        return cls(**values)
