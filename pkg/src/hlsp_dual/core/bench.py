"""Benchmark suites over random hierarchies.

Every (p, rep) cell draws its problem from a seed derived from the base
seed, so a suite is reproducible. Cells run on a thread pool capped by
``settings.threads``; a failing solver becomes a ``failed`` record instead
of aborting the suite. Numerical errors raised by numpy or scipy count as
solver failures too.
"""

import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from ..config import settings
from ..errors import HlspError, InvalidParameterError
from ..logging_config import get_logger
from ..models.bench import BenchRecord, BenchSummary, ExperimentConfig
from ..models.config import AdmmConfig, IpmConfig
from ..models.problem import HlspProblem
from ..models.report import SolveReport, SolverName
from . import baseline, dhadm, dhipm
from .problem import generate_random_hierarchy

logger = get_logger("core.bench")

SEED_STRIDE = 100_003
PHASE_COLUMNS = ("t_kkt", "t_rhs", "t_solve", "t_lambda", "t_proj", "t_dual")


def cell_seed(base_seed: int, p: int, rep: int) -> int:
    """Problem seed of one (p, rep) cell; distinct for every cell of a suite."""
    return base_seed + p * SEED_STRIDE + rep


def run_solver(
    problem: HlspProblem,
    solver: SolverName,
    admm_config: Optional[AdmmConfig] = None,
    ipm_config: Optional[IpmConfig] = None,
) -> SolveReport:
    """Dispatch ``problem`` to one of the three solvers."""
    if solver == "dhadm":
        return dhadm.solve(problem, admm_config)
    if solver == "dhipm":
        return dhipm.solve_ipm(problem, ipm_config)
    if solver == "baseline":
        return baseline.solve_baseline(problem)
    raise InvalidParameterError(f"unknown solver {solver!r}")


def record_from_report(p: int, seed: int, report: SolveReport) -> BenchRecord:
    timings = report.timings
    return BenchRecord(
        p=p,
        solver=report.solver,
        seed=seed,
        status=report.status,
        time_ms=report.wall_time_ms,
        iters=report.iterations,
        residual=report.residual_norm,
        objectives=report.objectives,
        refactors=report.refactor_count,
        t_kkt=timings.kkt,
        t_rhs=timings.rhs,
        t_solve=timings.solve,
        t_lambda=timings.lam,
        t_proj=timings.proj,
        t_dual=timings.dual,
        message=report.message,
    )


def _solver_configs(config: ExperimentConfig) -> Tuple[AdmmConfig, IpmConfig]:
    admm_overrides = {}
    if config.admm_chi is not None:
        admm_overrides["chi"] = config.admm_chi
    if config.admm_max_iters is not None:
        admm_overrides["max_iters"] = config.admm_max_iters
    ipm_overrides = {}
    if config.ipm_chi is not None:
        ipm_overrides["chi"] = config.ipm_chi
    return AdmmConfig.from_settings(**admm_overrides), IpmConfig.from_settings(**ipm_overrides)


def _run_cell(
    config: ExperimentConfig,
    p: int,
    rep: int,
    admm_config: AdmmConfig,
    ipm_config: IpmConfig,
) -> List[BenchRecord]:
    seed = cell_seed(config.seed, p, rep)
    problem = generate_random_hierarchy(p, seed, full_rank=config.full_rank)
    records = []
    for solver in config.solvers:
        started = time.perf_counter()
        try:
            report = run_solver(problem, solver, admm_config, ipm_config)
            records.append(record_from_report(p, seed, report))
        except (HlspError, np.linalg.LinAlgError, ValueError, ArithmeticError) as exc:
            logger.warning("bench_cell_failed", p=p, rep=rep, seed=seed, solver=solver, error=str(exc))
            records.append(
                BenchRecord(
                    p=p,
                    solver=solver,
                    seed=seed,
                    status="failed",
                    time_ms=1000.0 * (time.perf_counter() - started),
                    message=f"{type(exc).__name__}: {exc}",
                )
            )
    return records


def run_suite(config: ExperimentConfig) -> List[BenchRecord]:
    """Run every enabled solver on ``reps`` problems for each ``p``.

    Records come back ordered by p, then rep, then solver order of the
    config, whatever the thread count.
    """
    admm_config, ipm_config = _solver_configs(config)
    cells = [(p, rep) for p in range(config.p_min, config.p_max + 1) for rep in range(config.reps)]
    threads = config.threads or settings.threads
    started = time.perf_counter()

    logger.info(
        "suite_started",
        p_min=config.p_min,
        p_max=config.p_max,
        reps=config.reps,
        solvers=list(config.solvers),
        threads=threads,
    )
    if threads == 1:
        per_cell = [_run_cell(config, p, rep, admm_config, ipm_config) for p, rep in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            futures = [
                executor.submit(_run_cell, config, p, rep, admm_config, ipm_config) for p, rep in cells
            ]
            per_cell = [future.result() for future in futures]

    records = [record for cell in per_cell for record in cell]
    logger.info(
        "suite_finished",
        records=len(records),
        failures=sum(record.status == "failed" for record in records),
        wall_time_ms=round(1000.0 * (time.perf_counter() - started), 3),
    )
    return records


def phase_shares(record: BenchRecord) -> Dict[str, float]:
    """Percentage of the accounted solver time in each phase column."""
    values = {name: getattr(record, name) for name in PHASE_COLUMNS}
    total = sum(values.values())
    if total <= 0.0:
        return {name: 0.0 for name in PHASE_COLUMNS}
    return {name: 100.0 * value / total for name, value in values.items()}


def _objective_gap(record: BenchRecord, reference: Optional[BenchRecord]) -> Optional[float]:
    if reference is None or record.status == "failed" or reference.status == "failed":
        return None
    if len(record.objectives) != len(reference.objectives):
        return None
    return max(
        (abs(a - b) for a, b in zip(record.objectives, reference.objectives)),
        default=0.0,
    )


def summarize_records(records: Iterable[BenchRecord]) -> List[BenchSummary]:
    """Per (p, solver) medians plus the largest objective gap to the baseline run on the same seed."""
    records = list(records)
    baselines = {
        (record.p, record.seed): record for record in records if record.solver == "baseline"
    }
    groups: Dict[Tuple[int, str], List[BenchRecord]] = {}
    for record in records:
        groups.setdefault((record.p, record.solver), []).append(record)

    summaries = []
    for (p, solver), group in sorted(groups.items()):
        finished = [record for record in group if record.status != "failed"]
        gaps = [
            gap
            for gap in (_objective_gap(record, baselines.get((record.p, record.seed))) for record in group)
            if gap is not None
        ]
        summaries.append(
            BenchSummary(
                p=p,
                solver=solver,
                runs=len(group),
                failures=len(group) - len(finished),
                median_time_ms=statistics.median(r.time_ms for r in finished) if finished else 0.0,
                median_iters=statistics.median(r.iters for r in finished) if finished else 0.0,
                median_residual=statistics.median(r.residual for r in finished) if finished else 0.0,
                max_objective_gap=max(gaps) if gaps and solver != "baseline" else None,
            )
        )
    return summaries
