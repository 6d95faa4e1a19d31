from typing import List, Literal, Optional

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from .. import __version__
from ..core.bench import run_solver
from ..core.gradient import jacobian_x_wrt_b
from ..core.problem import generate_random_hierarchy, validate_problem
from ..errors import HlspError
from ..logging_config import get_logger
from ..models.config import AdmmConfig, IpmConfig
from ..models.problem import HlspProblem
from ..models.report import SolverName


app = FastAPI(
    title="Dual HLSP Toolkit API",
    description="Solve and differentiate equality-constrained hierarchical least-squares problems",
    version=__version__,
)
logger = get_logger("api.server")


class GenerateRequest(BaseModel):
    p: int = Field(ge=1)
    seed: int = 0
    full_rank: bool = False
    feasible: bool = False


class SolveRequest(BaseModel):
    problem: HlspProblem
    solver: SolverName = "dhadm"
    admm: Optional[AdmmConfig] = None
    ipm: Optional[IpmConfig] = None


class GradientRequest(BaseModel):
    problem: HlspProblem
    source: Literal["baseline", "dhipm"] = "baseline"


class GradientResponse(BaseModel):
    """``dx/db``: one row per variable, one column per row of the stacked ``b``."""

    n_x: int
    columns: int
    source: str
    jacobian: List[List[float]]


def _fail(endpoint: str, exc: Exception) -> HTTPException:
    if isinstance(exc, HlspError):
        logger.warning(f"{endpoint}_rejected", error=str(exc), error_type=type(exc).__name__)
        return HTTPException(status_code=422, detail=str(exc))
    logger.error(f"{endpoint}_error", error=str(exc), error_type=type(exc).__name__)
    return HTTPException(status_code=500, detail=str(exc))


# ============================================================================
# Endpoints
# ============================================================================


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/generate")
def generate(req: GenerateRequest) -> dict:
    logger.info("generate_request", p=req.p, seed=req.seed, full_rank=req.full_rank)
    try:
        problem = generate_random_hierarchy(req.p, req.seed, full_rank=req.full_rank, feasible=req.feasible)
    except Exception as exc:
        raise _fail("generate", exc) from exc
    return problem.model_dump(mode="json")


@app.post("/solve")
def solve(req: SolveRequest) -> Response:
    """Run one solver. Non-finite reals in the report are sent as null."""
    logger.info("solve_request", solver=req.solver, p=req.problem.p, n_x=req.problem.n_x)
    try:
        validate_problem(req.problem)
        report = run_solver(
            req.problem,
            req.solver,
            admm_config=req.admm or AdmmConfig.from_settings(),
            ipm_config=req.ipm or IpmConfig.from_settings(),
        )
    except Exception as exc:
        raise _fail("solve", exc) from exc

    logger.info(
        "solve_response",
        solver=report.solver,
        status=report.status,
        iterations=report.iterations,
        wall_time_ms=round(report.wall_time_ms, 3),
    )
    return Response(content=report.model_dump_json(by_alias=True), media_type="application/json")


@app.post("/gradient", response_model=GradientResponse)
def gradient(req: GradientRequest) -> GradientResponse:
    logger.info("gradient_request", source=req.source, p=req.problem.p, n_x=req.problem.n_x)
    try:
        validate_problem(req.problem)
        jacobian = jacobian_x_wrt_b(req.problem, source=req.source)
    except Exception as exc:
        raise _fail("gradient", exc) from exc
    return GradientResponse(
        n_x=int(jacobian.shape[0]),
        columns=int(jacobian.shape[1]),
        source=req.source,
        jacobian=jacobian.tolist(),
    )
