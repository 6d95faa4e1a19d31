"""Primal-dual interior-point solver for the dual hierarchy (reference solver).

The duality inequality of every level ``l < p`` gets a slack ``w_l`` with
a log barrier:

    v_l^T (v_l + b_l) + lambda_l^T b_{<l} + w_l = eps,    w_l > 0

and Newton's method is applied to the full KKT conditions. Nothing is
eliminated: every step factorizes the complete square system over

    x | (v_l, mu_l, eta_l, theta_l, w_l) for l < p | v_p, mu_p | lambda_2 .. lambda_{p-1}

``eps`` (``IpmConfig.qc_relaxation``) gives the barrier problem an interior:
on the first level the duality expression vanishes identically once the
normal equations hold, so without it ``w_1`` would be pinned at zero.
"""

import math
import time
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from scipy import linalg as sla

from ..errors import DimensionMismatchError, MaxItersExceededError, SingularKktError
from ..logging_config import get_logger
from ..models.config import IpmConfig
from ..models.problem import HlspProblem, HlspSolution
from ..models.report import PhaseTimings, SolveReport
from .kkt_layout import IPM_LEVEL_BLOCKS, KktLayout
from .problem import duality_gap_per_level, validate_problem

logger = get_logger("core.dhipm")

PRIMAL_BLOCKS = frozenset({"x", "v", "w", "lam"})


@dataclass
class IpmState:
    """Stacked iterate ``psi`` plus the barrier parameters it is centred on."""

    layout: KktLayout
    psi: np.ndarray
    mu_barrier: float
    sigma: float
    relaxation: float
    iterations: int = 0
    last_step: float = 0.0

    @classmethod
    def initial(cls, problem: HlspProblem, config: IpmConfig) -> "IpmState":
        """``x, v, lambda, eta, mu = 0`` and ``theta = w = 1``."""
        layout = KktLayout.build(problem, IPM_LEVEL_BLOCKS)
        psi = layout.zeros()
        for level in range(1, problem.p):
            psi[layout.index("theta", level)] = 1.0
            psi[layout.index("w", level)] = 1.0
        return cls(
            layout=layout,
            psi=psi,
            mu_barrier=config.mu0,
            sigma=config.sigma,
            relaxation=config.qc_relaxation,
        )

    def block(self, name: str, level: int = 0) -> np.ndarray:
        return self.layout.get(self.psi, name, level)

    @property
    def x(self) -> np.ndarray:
        return self.psi[self.layout.x]

    @property
    def theta(self) -> np.ndarray:
        return np.array([self.psi[self.layout.index("theta", l)] for l in range(1, self.layout.p)])

    @property
    def w(self) -> np.ndarray:
        return np.array([self.psi[self.layout.index("w", l)] for l in range(1, self.layout.p)])

    @property
    def lam(self) -> list:
        return [self.block("lam", l).copy() for l in range(2, self.layout.p)]

    @property
    def target(self) -> float:
        """Complementarity target ``sigma * mu``."""
        return self.sigma * self.mu_barrier

    def copy(self) -> "IpmState":
        return replace(self, psi=self.psi.copy())


def _check_layout(problem: HlspProblem, state: IpmState) -> None:
    layout = state.layout
    if layout.p != problem.p or layout.n_x != problem.n_x:
        raise DimensionMismatchError(
            f"state is laid out for p={layout.p}, n_x={layout.n_x}; "
            f"problem has p={problem.p}, n_x={problem.n_x}"
        )
    expected = KktLayout.build(problem, IPM_LEVEL_BLOCKS)
    if expected.dimension != layout.dimension:
        raise DimensionMismatchError(
            f"state has dimension {layout.dimension}, problem needs {expected.dimension}"
        )
    layout.check(state.psi)


# ============================================================================
# KKT residual and Jacobian
# ============================================================================


def ipm_residual(problem: HlspProblem, state: IpmState, target: Optional[float] = None) -> np.ndarray:
    """KKT residual ``k`` with complementarity target ``target`` (default ``sigma * mu``)."""
    _check_layout(problem, state)
    target = state.target if target is None else target
    layout, psi = state.layout, state.psi
    p = problem.p
    k = layout.zeros()
    x = psi[layout.x]

    for level in range(1, p + 1):
        data = problem.levels[level - 1]
        v = layout.get(psi, "v", level)
        mu = layout.get(psi, "mu", level)
        k[layout.x] += data.A.T @ mu
        k[layout[("mu", level)]] = data.A @ x - data.b - v
        if level == p:
            k[layout[("v", level)]] = v - mu
            continue

        eta = layout.get(psi, "eta", level)
        theta = psi[layout.index("theta", level)]
        w = psi[layout.index("w", level)]
        k[layout[("v", level)]] = -mu + data.A @ eta + theta * (2.0 * v + data.b)

        gap = float(v @ (v + data.b))
        k_eta = data.A.T @ v
        if level >= 2:
            lam = layout.get(psi, "lam", level)
            A_prev, b_prev = problem.stacked_A(level - 1), problem.stacked_b(level - 1)
            gap += float(lam @ b_prev)
            k_eta = k_eta + A_prev.T @ lam
            k[layout[("lam", level)]] = theta * b_prev + A_prev @ eta
        k[layout[("eta", level)]] = k_eta
        k[layout.index("theta", level)] = gap + w - state.relaxation
        k[layout.index("w", level)] = theta * w - target
    return k


def ipm_jacobian(problem: HlspProblem, state: IpmState) -> np.ndarray:
    """Jacobian ``K`` of :func:`ipm_residual` with respect to ``psi``.

    Symmetric apart from the ``diag(w)`` / ``diag(theta)`` complementarity row.
    """
    _check_layout(problem, state)
    layout, psi = state.layout, state.psi
    p = problem.p
    K = np.zeros((layout.dimension, layout.dimension))
    X = layout.x

    for level in range(1, p + 1):
        data = problem.levels[level - 1]
        V, MU = layout[("v", level)], layout[("mu", level)]
        eye = np.eye(data.m)

        K[X, MU] = data.A.T
        K[MU, X] = data.A
        K[MU, V] = -eye
        K[V, MU] = -eye
        if level == p:
            K[V, V] = eye
            continue

        ETA = layout[("eta", level)]
        t, w = layout.index("theta", level), layout.index("w", level)
        v = psi[V]
        theta = psi[t]
        slope = 2.0 * v + data.b

        K[V, V] = 2.0 * theta * eye
        K[V, ETA] = data.A
        K[V, t] = slope
        K[ETA, V] = data.A.T
        K[t, V] = slope
        K[t, w] = 1.0
        K[w, t] = psi[w]
        K[w, w] = theta

        if level >= 2:
            LAM = layout[("lam", level)]
            A_prev, b_prev = problem.stacked_A(level - 1), problem.stacked_b(level - 1)
            K[ETA, LAM] = A_prev.T
            K[t, LAM] = b_prev
            K[LAM, t] = b_prev
            K[LAM, ETA] = A_prev
    return K


def assemble_ipm_kkt(
    problem: HlspProblem, state: IpmState, target: Optional[float] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Newton system ``(K, k)`` at ``state``.

    Raises:
        DimensionMismatchError: If the state does not belong to ``problem``.
    """
    return ipm_jacobian(problem, state), ipm_residual(problem, state, target)


# ============================================================================
# Newton step
# ============================================================================


def _regularize(K: np.ndarray, layout: KktLayout, delta: float) -> np.ndarray:
    if delta <= 0.0:
        return K
    shifts = np.empty(layout.dimension)
    for (name, _), block in layout.blocks():
        shifts[block] = delta if name in PRIMAL_BLOCKS else -delta
    return K + np.diag(shifts)


def _newton_direction(K: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        lu, piv = sla.lu_factor(K, check_finite=True)
    except (ValueError, sla.LinAlgError) as exc:
        raise SingularKktError(f"interior-point KKT factorization failed: {exc}") from exc
    if np.any(np.diag(lu) == 0.0):
        raise SingularKktError("interior-point KKT matrix is singular")
    direction = sla.lu_solve((lu, piv), rhs)
    if not np.all(np.isfinite(direction)):
        raise SingularKktError("interior-point Newton direction is not finite")
    return direction


def _step_length(state: IpmState, direction: np.ndarray, tau: float) -> float:
    alpha = 1.0
    for level in range(1, state.layout.p):
        for name in ("theta", "w"):
            i = state.layout.index(name, level)
            if direction[i] < 0.0:
                alpha = min(alpha, -tau * state.psi[i] / direction[i])
    return alpha


def ipm_step(
    problem: HlspProblem,
    state: IpmState,
    config: Optional[IpmConfig] = None,
    timings: Optional[PhaseTimings] = None,
) -> IpmState:
    """One damped Newton step towards the centred KKT point.

    Solves ``K d = -k`` on the full system and moves by the largest
    ``alpha`` in (0, 1] that keeps ``theta`` and ``w`` above ``(1 - tau)``
    times their current values.

    Raises:
        SingularKktError: If the (regularized) system cannot be solved.
    """
    config = config or IpmConfig()
    t = time.perf_counter()
    K, k = assemble_ipm_kkt(problem, state)
    if timings is not None:
        timings.kkt += 1000.0 * (time.perf_counter() - t)

    t = time.perf_counter()
    direction = _newton_direction(_regularize(K, state.layout, config.regularization), -k)
    if timings is not None:
        timings.solve += 1000.0 * (time.perf_counter() - t)

    t = time.perf_counter()
    alpha = _step_length(state, direction, config.tau)
    updated = state.copy()
    updated.psi = state.psi + alpha * direction
    updated.iterations = state.iterations + 1
    updated.last_step = alpha
    if timings is not None:
        timings.dual += 1000.0 * (time.perf_counter() - t)
    return updated


# ============================================================================
# Driver
# ============================================================================


def _solution(problem: HlspProblem, state: IpmState, residual: float) -> HlspSolution:
    return HlspSolution.from_primal(problem, state.x.copy(), lam=state.lam, kkt_residual=residual)


def run_ipm(problem: HlspProblem, config: Optional[IpmConfig] = None) -> Tuple[SolveReport, IpmState]:
    """Path-following solve of the dual hierarchy, returning the final state too.

    The barrier parameter starts at ``mu0`` and shrinks by ``mu_factor``
    once the centred residual drops below ``10 * sigma * mu`` (or after
    ``max_inner_iters`` steps). The solve stops when the uncentred residual
    norm falls below ``chi``.

    Raises:
        MaxItersExceededError: Only when ``config.raise_on_max_iters`` is set.
        SingularKktError: If a Newton system cannot be solved.
    """
    config = config or IpmConfig.from_settings()
    validate_problem(problem)
    started = time.perf_counter()
    timings = PhaseTimings()

    state = IpmState.initial(problem, config)
    logger.info("ipm_solve_started", p=problem.p, n_x=problem.n_x, dimension=state.layout.dimension)

    best_state, best_norm = state.copy(), math.inf
    status = "max_iters"
    inner = 0
    residual = math.inf

    for _ in range(config.max_iters + 1):
        t = time.perf_counter()
        residual = float(np.linalg.norm(ipm_residual(problem, state, target=0.0)))
        timings.rhs += 1000.0 * (time.perf_counter() - t)
        if residual < best_norm:
            best_state, best_norm = state.copy(), residual
        if residual < config.chi:
            status = "converged"
            break
        if state.iterations >= config.max_iters:
            break

        state = ipm_step(problem, state, config, timings)
        inner += 1

        centred = float(np.linalg.norm(ipm_residual(problem, state)))
        if (centred <= 10.0 * state.target or inner >= config.max_inner_iters) and state.mu_barrier > config.mu_min:
            state.mu_barrier = max(state.mu_barrier * config.mu_factor, config.mu_min)
            logger.debug(
                "ipm_barrier_reduced",
                iteration=state.iterations,
                mu_barrier=state.mu_barrier,
                centred_residual=centred,
                inner_steps=inner,
            )
            inner = 0

    final = state if status == "converged" else best_state
    final_norm = residual if status == "converged" else best_norm
    solution = _solution(problem, final, final_norm)
    wall_time_ms = 1000.0 * (time.perf_counter() - started)

    message = None
    if status == "max_iters":
        message = f"residual {final_norm:.3e} above chi {config.chi:.1e} after {state.iterations} Newton steps"
        if config.raise_on_max_iters:
            raise MaxItersExceededError(message)

    report = SolveReport(
        solver="dhipm",
        status=status,
        solution=solution,
        iterations=state.iterations,
        residual_norm=final_norm,
        wall_time_ms=wall_time_ms,
        timings=timings,
        theta=final.theta.tolist(),
        duality_gap=duality_gap_per_level(problem, solution).tolist(),
        message=message,
    )
    logger.info(
        "ipm_solve_finished",
        p=problem.p,
        status=status,
        iterations=state.iterations,
        residual=final_norm,
        mu_barrier=final.mu_barrier,
        wall_time_ms=round(wall_time_ms, 3),
    )
    return report, final


def solve_ipm(problem: HlspProblem, config: Optional[IpmConfig] = None) -> SolveReport:
    """Solve ``problem`` with the interior-point solver; see :func:`run_ipm`."""
    report, _ = run_ipm(problem, config)
    return report
