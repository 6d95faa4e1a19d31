"""Sensitivities of the hierarchy solution with respect to ``A`` and ``b``.

Differentiating the KKT conditions of the dual hierarchy at a converged
primal-dual point gives a linear system ``dK dpsi = dk``. ``dK`` depends
only on the point; ``dk`` is linear in the perturbations ``dA``, ``db``.
The stacked differential is laid out as

    dx | (dv_l, dmu_l, dtheta_l, deta_l) for l < p | dv_p, dmu_p | dlambda_2 .. dlambda_{p-1}

A level whose ``theta`` is below ``INACTIVE_THETA`` has its complementarity
row replaced by ``dtheta = 0``.
"""

from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence

import numpy as np
from scipy import linalg as sla

from ..errors import (
    DimensionMismatchError,
    InvalidParameterError,
    PointNotConvergedError,
    SingularSystemError,
)
from ..logging_config import get_logger
from ..models.config import IpmConfig
from ..models.problem import HlspProblem
from .baseline import solve_sequential
from .kkt_layout import DIFFERENTIAL_LEVEL_BLOCKS, KktLayout
from .problem import validate_problem

logger = get_logger("core.gradient")

INACTIVE_THETA = 1e-8
POINT_TOL = 1e-6
RANK_TOL = 1e-10
CONSISTENCY_TOL = 1e-8
UNIQUENESS_TOL = 1e-6

PointSource = Literal["baseline", "dhipm"]


# ============================================================================
# Converged points
# ============================================================================


@dataclass
class ConvergedPoint:
    """Primal-dual point of the dual hierarchy.

    ``v``/``mu`` hold levels 1 .. p, ``eta``/``theta`` levels 1 .. p-1 and
    ``lam`` levels 2 .. p-1.
    """

    x: np.ndarray
    v: List[np.ndarray]
    mu: List[np.ndarray]
    eta: List[np.ndarray]
    theta: np.ndarray
    lam: List[np.ndarray]
    source: str = "manual"
    residual: float = field(default=0.0)

    @property
    def p(self) -> int:
        return len(self.v)


def _gap(problem: HlspProblem, point: ConvergedPoint, level: int) -> float:
    data = problem.levels[level - 1]
    v = point.v[level - 1]
    value = float(v @ (v + data.b))
    if level >= 2:
        value += float(point.lam[level - 2] @ problem.stacked_b(level - 1))
    return value


def kkt_residual(problem: HlspProblem, point: ConvergedPoint) -> float:
    """Largest violation of the (unrelaxed) KKT conditions at ``point``."""
    p = problem.p
    if point.p != p or point.x.shape[0] != problem.n_x:
        raise DimensionMismatchError(
            f"point has p={point.p}, n_x={point.x.shape[0]}; problem has p={p}, n_x={problem.n_x}"
        )
    parts = []
    stationarity_x = np.zeros(problem.n_x)
    for level in range(1, p + 1):
        data = problem.levels[level - 1]
        v, mu = point.v[level - 1], point.mu[level - 1]
        stationarity_x += data.A.T @ mu
        parts.append(data.A @ point.x - data.b - v)
        if level == p:
            parts.append(v - mu)
            continue
        eta, theta = point.eta[level - 1], float(point.theta[level - 1])
        parts.append(-mu + data.A @ eta + theta * (2.0 * v + data.b))
        k_eta = data.A.T @ v
        if level >= 2:
            lam = point.lam[level - 2]
            A_prev, b_prev = problem.stacked_A(level - 1), problem.stacked_b(level - 1)
            k_eta = k_eta + A_prev.T @ lam
            parts.append(theta * b_prev + A_prev @ eta)
        parts.append(k_eta)
        parts.append(np.array([theta * _gap(problem, point, level)]))
    parts.append(stationarity_x)
    return max((float(np.max(np.abs(part))) for part in parts if part.size), default=0.0)


def _eta_from_stationarity(problem: HlspProblem, v_last: np.ndarray) -> List[np.ndarray]:
    """``eta`` with ``theta = 0``: ``sum_l A_l^T A_l eta_l = -A_p^T v_p`` and ``A_{<l} eta_l = 0``."""
    p, n = problem.p, problem.n_x
    if p == 1:
        return []
    columns = (p - 1) * n
    rows = [np.hstack([level.A.T @ level.A for level in problem.levels[: p - 1]])]
    rhs = [-problem.levels[-1].A.T @ v_last]
    for level in range(2, p):
        above = problem.stacked_A(level - 1)
        block = np.zeros((above.shape[0], columns))
        block[:, (level - 1) * n : level * n] = above
        rows.append(block)
        rhs.append(np.zeros(above.shape[0]))
    solution, *_ = sla.lstsq(np.vstack(rows), np.concatenate(rhs), cond=RANK_TOL)
    return [solution[i * n : (i + 1) * n] for i in range(p - 1)]


def _point_from_baseline(problem: HlspProblem) -> ConvergedPoint:
    solution = solve_sequential(problem)
    eta = _eta_from_stationarity(problem, solution.v[-1])
    mu = [problem.levels[i].A @ eta[i] for i in range(problem.p - 1)] + [solution.v[-1].copy()]
    return ConvergedPoint(
        x=solution.x.copy(),
        v=[block.copy() for block in solution.v],
        mu=mu,
        eta=eta,
        theta=np.zeros(problem.p - 1),
        lam=[block.copy() for block in solution.lam],
        source="baseline",
    )


def _point_from_ipm(problem: HlspProblem, config: Optional[IpmConfig]) -> ConvergedPoint:
    from .dhipm import run_ipm

    _, state = run_ipm(problem, config)
    p = problem.p
    return ConvergedPoint(
        x=state.x.copy(),
        v=[state.block("v", l).copy() for l in range(1, p + 1)],
        mu=[state.block("mu", l).copy() for l in range(1, p + 1)],
        eta=[state.block("eta", l).copy() for l in range(1, p)],
        theta=state.theta,
        lam=state.lam,
        source="dhipm",
    )


def converged_point(
    problem: HlspProblem,
    source: PointSource = "baseline",
    config: Optional[IpmConfig] = None,
    tol: float = POINT_TOL,
) -> ConvergedPoint:
    """Primal-dual point to differentiate at.

    ``baseline`` takes ``x`` and ``lambda`` from the sequential solver with
    every ``theta = 0`` and recovers ``eta``/``mu`` by least squares;
    ``dhipm`` reads all blocks from the interior-point solver.

    Raises:
        PointNotConvergedError: If the point violates the KKT conditions by more than ``tol``.
    """
    validate_problem(problem)
    if source == "baseline":
        point = _point_from_baseline(problem)
    elif source == "dhipm":
        point = _point_from_ipm(problem, config)
    else:
        raise InvalidParameterError(f"unknown point source {source!r}")
    point.residual = kkt_residual(problem, point)
    if point.residual > tol:
        raise PointNotConvergedError(
            f"{source} point violates the KKT conditions by {point.residual:.3e} (tol {tol:.1e})"
        )
    return point


# ============================================================================
# Differential system
# ============================================================================


@dataclass
class DifferentialSystem:
    """``dK`` at a converged point, with a cached singular value decomposition."""

    dK: np.ndarray
    layout: KktLayout
    point: ConvergedPoint
    inactive: List[int]
    _svd: Optional[tuple] = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.layout.dimension

    def decomposition(self):
        if self._svd is None:
            try:
                self._svd = sla.svd(self.dK, full_matrices=True)
            except (ValueError, sla.LinAlgError) as exc:
                raise SingularSystemError(f"cannot decompose the differential system: {exc}") from exc
        return self._svd

    def rank(self) -> int:
        _, s, _ = self.decomposition()
        return int(np.sum(s > RANK_TOL * s[0])) if s.size and s[0] > 0 else 0

    def condition_number(self) -> float:
        _, s, _ = self.decomposition()
        return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")

    def check_unique_x(self) -> None:
        """Raise ``SingularSystemError`` if ``dx`` is not determined by the system."""
        _, _, Vt = self.decomposition()
        null = Vt[self.rank() :]
        if null.size and float(np.max(np.abs(null[:, self.layout.x]))) > UNIQUENESS_TOL:
            raise SingularSystemError("the solution x is not locally unique at this point")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Minimum-norm solution of ``dK X = rhs`` (one or many columns).

        Raises:
            SingularSystemError: If ``dx`` is not unique or ``rhs`` is inconsistent.
        """
        self.check_unique_x()
        U, s, Vt = self.decomposition()
        r = self.rank()
        rhs = np.asarray(rhs, dtype=float)
        coefficients = (U[:, :r].T @ rhs) / (s[:r][:, None] if rhs.ndim == 2 else s[:r])
        solution = Vt[:r].T @ coefficients

        residual = float(np.linalg.norm(self.dK @ solution - rhs))
        scale = 1.0 + float(np.linalg.norm(self.dK)) * float(np.linalg.norm(solution)) + float(np.linalg.norm(rhs))
        if residual > CONSISTENCY_TOL * scale:
            raise SingularSystemError(
                f"differential system is inconsistent (residual {residual:.3e})"
            )
        return solution


def assemble_differential(
    problem: HlspProblem, point: ConvergedPoint, tol: float = POINT_TOL
) -> DifferentialSystem:
    """Build ``dK`` at ``point``.

    Raises:
        PointNotConvergedError: If ``point`` is not a KKT point within ``tol``.
    """
    residual = kkt_residual(problem, point)
    if residual > tol:
        raise PointNotConvergedError(f"point violates the KKT conditions by {residual:.3e}")

    layout = KktLayout.build(problem, DIFFERENTIAL_LEVEL_BLOCKS)
    p = problem.p
    dK = np.zeros((layout.dimension, layout.dimension))
    X = layout.x
    inactive: List[int] = []

    for level in range(1, p + 1):
        data = problem.levels[level - 1]
        V, MU = layout[("v", level)], layout[("mu", level)]
        eye = np.eye(data.m)
        dK[X, MU] = data.A.T
        dK[MU, X] = data.A
        dK[MU, V] = -eye
        if level == p:
            dK[V, V] = eye
            dK[V, MU] = -eye
            continue

        ETA = layout[("eta", level)]
        t = layout.index("theta", level)
        v = point.v[level - 1]
        theta = float(point.theta[level - 1])
        slope = 2.0 * v + data.b

        dK[V, V] = 2.0 * theta * eye
        dK[V, MU] = -eye
        dK[V, t] = slope
        dK[V, ETA] = data.A
        dK[ETA, V] = data.A.T
        if level >= 2:
            LAM = layout[("lam", level)]
            A_prev, b_prev = problem.stacked_A(level - 1), problem.stacked_b(level - 1)
            dK[ETA, LAM] = A_prev.T
            dK[LAM, t] = b_prev
            dK[LAM, ETA] = A_prev

        if theta < INACTIVE_THETA:
            dK[t, t] = 1.0
            inactive.append(level)
            continue
        dK[t, V] = theta * slope
        dK[t, t] = _gap(problem, point, level)
        if level >= 2:
            dK[t, layout[("lam", level)]] = theta * problem.stacked_b(level - 1)

    return DifferentialSystem(dK=dK, layout=layout, point=point, inactive=inactive)


def _check_perturbations(problem: HlspProblem, dA: Sequence[np.ndarray], db: Sequence[np.ndarray]) -> None:
    if len(dA) != problem.p or len(db) != problem.p:
        raise DimensionMismatchError(f"expected {problem.p} perturbation blocks per kind")
    for level, (A_pert, b_pert, data) in enumerate(zip(dA, db, problem.levels), start=1):
        if np.shape(A_pert) != data.A.shape or np.shape(b_pert) != data.b.shape:
            raise DimensionMismatchError(f"perturbation of level {level} does not match its data")


def differential_rhs(
    problem: HlspProblem,
    system: DifferentialSystem,
    dA: Sequence[np.ndarray],
    db: Sequence[np.ndarray],
) -> np.ndarray:
    """``dk`` for the perturbations ``dA_l``, ``db_l`` (one entry per level)."""
    _check_perturbations(problem, dA, db)
    layout, point = system.layout, system.point
    p = problem.p
    dk = layout.zeros()

    for level in range(1, p + 1):
        A_pert, b_pert = np.asarray(dA[level - 1], dtype=float), np.asarray(db[level - 1], dtype=float)
        dk[layout.x] -= A_pert.T @ point.mu[level - 1]
        dk[layout[("mu", level)]] = -A_pert @ point.x + b_pert
        if level == p:
            continue

        theta = float(point.theta[level - 1])
        eta, v = point.eta[level - 1], point.v[level - 1]
        dk[layout[("v", level)]] = -theta * b_pert - A_pert @ eta
        k_eta = -A_pert.T @ v
        k_theta = -theta * float(v @ b_pert)
        if level >= 2:
            lam = point.lam[level - 2]
            dA_prev = np.vstack([np.asarray(block, dtype=float) for block in dA[: level - 1]])
            db_prev = np.concatenate([np.asarray(block, dtype=float) for block in db[: level - 1]])
            k_eta = k_eta - dA_prev.T @ lam
            k_theta -= theta * float(lam @ db_prev)
            dk[layout[("lam", level)]] = -theta * db_prev - dA_prev @ eta
        dk[layout[("eta", level)]] = k_eta
        if level not in system.inactive:
            dk[layout.index("theta", level)] = k_theta
    return dk


@dataclass(frozen=True)
class ParameterEntry:
    """One scalar problem parameter: ``A_l[row, col]`` or ``b_l[row]`` (1-based level)."""

    kind: Literal["A", "b"]
    level: int
    row: int
    col: Optional[int] = None


def _unit_perturbation(problem: HlspProblem, target: ParameterEntry):
    if not 1 <= target.level <= problem.p:
        raise InvalidParameterError(f"level {target.level} outside 1..{problem.p}")
    data = problem.levels[target.level - 1]
    dA = [np.zeros_like(level.A) for level in problem.levels]
    db = [np.zeros_like(level.b) for level in problem.levels]
    if not 0 <= target.row < data.m:
        raise InvalidParameterError(f"row {target.row} outside level {target.level}")
    if target.kind == "A":
        if target.col is None or not 0 <= target.col < problem.n_x:
            raise InvalidParameterError(f"column {target.col} outside 0..{problem.n_x - 1}")
        dA[target.level - 1][target.row, target.col] = 1.0
    elif target.kind == "b":
        db[target.level - 1][target.row] = 1.0
    else:
        raise InvalidParameterError(f"unknown parameter kind {target.kind!r}")
    return dA, db


def jacobian_wrt(
    problem: HlspProblem,
    point: ConvergedPoint,
    target: ParameterEntry,
    system: Optional[DifferentialSystem] = None,
) -> np.ndarray:
    """Full sensitivity vector ``dpsi`` for a unit change of ``target``.

    ``dx`` is ``dpsi[system.layout.x]``.

    Raises:
        SingularSystemError: If the point is degenerate.
    """
    system = system or assemble_differential(problem, point)
    dA, db = _unit_perturbation(problem, target)
    dpsi = system.solve(differential_rhs(problem, system, dA, db))
    logger.debug("jacobian_solved", target=f"{target.kind}_{target.level}", row=target.row, col=target.col)
    return dpsi


def jacobian_x_wrt_b(
    problem: HlspProblem,
    point: Optional[ConvergedPoint] = None,
    source: PointSource = "baseline",
) -> np.ndarray:
    """``dx/db`` as an ``n_x x total_rows`` matrix, columns ordered level by level."""
    point = point or converged_point(problem, source)
    system = assemble_differential(problem, point)
    columns = []
    for level, data in enumerate(problem.levels, start=1):
        for row in range(data.m):
            dA, db = _unit_perturbation(problem, ParameterEntry(kind="b", level=level, row=row))
            columns.append(differential_rhs(problem, system, dA, db))
    rhs = np.column_stack(columns) if columns else np.zeros((system.dimension, 0))
    solution = system.solve(rhs)
    jacobian = solution[system.layout.x, :]
    logger.info(
        "jacobian_solved",
        p=problem.p,
        n_x=problem.n_x,
        columns=jacobian.shape[1],
        source=point.source,
        inactive_levels=system.inactive,
    )
    return jacobian
