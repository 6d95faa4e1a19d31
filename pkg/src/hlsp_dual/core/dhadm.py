"""ADMM solver for the dual equality-constrained hierarchy.

Every iteration performs

1. the primal update: ``x`` from the reduced system ``K_x x = k_x``, then
   the slacks ``v`` and the primal-dual blocks ``lam`` by back-substitution,
2. the split update: over-relaxed candidates projected onto the per-level
   duality sets,
3. dual ascent on the multipliers ``mu, eta, phi, nu``.

Every ``check_every`` iterations the residuals are evaluated, the best
iterate is recorded and the adaptive step size is updated.

All iterations run in the equilibrated space. The row scaling ``W_l`` of
level ``l`` enters the constraints explicitly (``A_bar x - b_bar - W v``),
so the slacks keep their original units and the quadratic duality
constraints stay unscaled.

The multipliers are kept in the units of an augmented Lagrangian whose
penalty on constraint group ``*`` is ``rho * rho_*``; the stationarity
conditions are divided by ``rho``, so ``rho`` only appears in the
lowest-level term of ``K_x`` and in the multiplier steps.

The per-level blocks are assembled once into block-diagonal operators
over the stacked vectors of :class:`StackedState`, so an iteration costs a
fixed number of dense matrix-vector products whatever ``p`` is.
"""

import math
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg as sla

from ..errors import DimensionMismatchError, HlspError, MaxItersExceededError, ProjectionError
from ..logging_config import get_logger
from ..models.config import AdmmConfig
from ..models.problem import HlspProblem, HlspSolution
from ..models.report import PhaseTimings, SolveReport, SolveStatus
from .admm_state import AdmmState, StackedLayout, StackedState, scale_state, unscale_state
from .linalg import BlockInverseCache, SymmetricFactor, build_block_inverses, sym_factorize, sym_solve
from .preconditioner import EquilibrationScaling, precondition, unscale_solution
from .problem import duality_gap_per_level, validate_problem
from .projection import ProjectionInput, StackedSets, project, project_stacked

logger = get_logger("core.dhadm")

RHO_GUARD = 1e-12


# ============================================================================
# Per-level data
# ============================================================================


@dataclass(frozen=True)
class LevelBlocks:
    """Scaled data of one level as used by the iteration.

    ``b_hat`` is half of the original (unscaled) ``b``; ``b_prev`` stacks
    the scaled ``b`` of all levels above, which pairs with the scaled
    primal-dual block.
    """

    A: np.ndarray
    b: np.ndarray
    w: np.ndarray
    b_hat: np.ndarray
    A_prev: np.ndarray
    b_prev: np.ndarray

    @property
    def m(self) -> int:
        return int(self.A.shape[0])


def level_blocks(
    problem: HlspProblem, weights: Optional[Sequence[np.ndarray]] = None
) -> Tuple[LevelBlocks, ...]:
    """Split ``problem`` into per-level blocks with row weights ``weights``."""
    blocks = []
    for index, level in enumerate(problem.levels):
        w = np.ones(level.m) if weights is None else np.asarray(weights[index], dtype=float)
        blocks.append(
            LevelBlocks(
                A=level.A,
                b=level.b,
                w=w,
                b_hat=0.5 * level.b / w,
                A_prev=problem.stacked_A(index),
                b_prev=problem.stacked_b(index),
            )
        )
    return tuple(blocks)


# ============================================================================
# Stacked operators
# ============================================================================


@dataclass(frozen=True)
class StackedOperators:
    """Block operators acting on the vectors of :class:`StackedState`.

    Head quantities belong to the levels ``1 .. p-1``. ``A_blk_w`` is
    block-diagonal with blocks ``W_l^-1 A_l``; ``A_prev_blk`` places
    ``A_{<l}`` of level ``l = 2 .. p-1`` in the row block of ``lam_l`` and
    the column block of ``eta_l``. ``S_inv``, ``M_inv`` and ``G`` collect
    the per-level elimination matrices; ``Q``, ``R`` and ``SW`` are their
    products used by the back-substitution.
    """

    layout: StackedLayout
    A: np.ndarray
    b: np.ndarray
    w: np.ndarray
    row_level: np.ndarray
    b_hat: np.ndarray
    A_blk_w: np.ndarray
    A_prev_blk: np.ndarray
    G: np.ndarray
    M_inv: np.ndarray
    S_inv: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    SW: np.ndarray
    kx_const: np.ndarray
    h_const: np.ndarray
    sets: StackedSets
    kappa: float

    @property
    def head(self) -> slice:
        return slice(0, self.layout.head_rows)

    @property
    def last(self) -> slice:
        return slice(self.layout.head_rows, self.layout.rows)

    @property
    def A_head(self) -> np.ndarray:
        return self.A[self.head]

    @property
    def A_last(self) -> np.ndarray:
        return self.A[self.last]


def _block_diag(blocks: Sequence[np.ndarray]) -> np.ndarray:
    # scipy returns shape (1, 0) for no blocks
    return sla.block_diag(*blocks) if blocks else np.zeros((0, 0))


def build_operators(
    blocks: Sequence[LevelBlocks],
    layout: StackedLayout,
    S_inv: Sequence[np.ndarray],
    G: Sequence[np.ndarray],
    cache: BlockInverseCache,
    config: AdmmConfig,
) -> StackedOperators:
    head = blocks[:-1]
    n, p = layout.n_x, layout.p
    head_rows, dual_rows = layout.head_rows, layout.dual_rows
    rho_mu = config.rho_mu
    kappa = math.sqrt(config.rho_nu / config.rho_phi)

    A = np.vstack([block.A for block in blocks])
    b = np.concatenate([block.b for block in blocks])
    w = np.concatenate([block.w for block in blocks])
    row_level = np.repeat(np.arange(p), layout.sizes)
    A_head, b_head, w_head = A[:head_rows], b[:head_rows], w[:head_rows]
    b_hat = np.concatenate([np.zeros(0), *(block.b_hat for block in head)])

    A_blk_w = _block_diag([block.A / block.w[:, None] for block in head])
    A_prev_blk = np.zeros((dual_rows, (p - 1) * n))
    G_stacked = np.zeros((dual_rows, head_rows))
    row = 0
    for k, size in enumerate(layout.dual_sizes):
        index = k + 1
        col = sum(layout.sizes[:index])
        A_prev_blk[row : row + size, index * n : (index + 1) * n] = head[index].A_prev
        G_stacked[row : row + size, col : col + layout.sizes[index]] = G[k]
        row += size
    M_inv = _block_diag([cache.inverse(k + 1) for k in range(len(layout.dual_sizes))])
    S_inv_blk = _block_diag(list(S_inv))

    b_prev_blocks = [block.b_prev / kappa for block in head]
    return StackedOperators(
        layout=layout,
        A=A,
        b=b,
        w=w,
        row_level=row_level,
        b_hat=b_hat,
        A_blk_w=A_blk_w,
        A_prev_blk=A_prev_blk,
        G=G_stacked,
        M_inv=M_inv,
        S_inv=S_inv_blk,
        Q=rho_mu * A_head.T @ (w_head[:, None] * S_inv_blk),
        R=G_stacked.T @ M_inv,
        SW=S_inv_blk @ (rho_mu * w_head[:, None] * A_head),
        kx_const=rho_mu * A_head.T @ b_head,
        h_const=rho_mu * w_head * b_head + config.rho_phi * b_hat,
        sets=StackedSets.build([block.b_hat for block in head], b_prev_blocks),
        kappa=kappa,
    )


# ============================================================================
# Reduced KKT system
# ============================================================================


@dataclass(frozen=True)
class ReducedKkt:
    """Reduced system in ``x`` plus the cached elimination matrices.

    ``S_inv[l-1]`` inverts the slack block of level ``l < p`` after the
    primal-dual block has been eliminated; ``G[l-2]`` couples the slack of
    level ``l`` to its primal-dual block. Both depend on the constant
    weights only, so a change of ``rho`` only refreshes the lowest-level
    term of ``K_x``.
    """

    K_x: np.ndarray
    factor: SymmetricFactor
    rho: float
    K_static: np.ndarray
    S_inv: Tuple[np.ndarray, ...]
    G: Tuple[np.ndarray, ...]
    cache: BlockInverseCache
    blocks: Tuple[LevelBlocks, ...]
    ops: StackedOperators
    K_inv: np.ndarray
    last_weight: np.ndarray
    last_gain: np.ndarray
    factorizations: int = 1

    @property
    def p(self) -> int:
        return len(self.blocks)

    @property
    def n_x(self) -> int:
        return int(self.K_x.shape[0])


def _last_level_weight(block: LevelBlocks, config: AdmmConfig, rho: float) -> np.ndarray:
    return config.rho_mu / (1.0 + rho * config.rho_mu * block.w**2)


def _last_level_gain(block: LevelBlocks, config: AdmmConfig, rho: float) -> np.ndarray:
    return rho * config.rho_mu * block.w / (1.0 + rho * config.rho_mu * block.w**2)


def _last_level_term(block: LevelBlocks, config: AdmmConfig, rho: float) -> np.ndarray:
    C = _last_level_weight(block, config, rho)
    return block.A.T @ (C[:, None] * block.A)


def _factorize(K: np.ndarray) -> Tuple[np.ndarray, SymmetricFactor, np.ndarray]:
    K = 0.5 * (K + K.T)
    factor = sym_factorize(K)
    K_inv = sym_solve(factor, np.eye(K.shape[0]))
    return K, factor, 0.5 * (K_inv + K_inv.T)


def assemble_reduced_kkt(
    problem: HlspProblem,
    config: AdmmConfig,
    cache: BlockInverseCache,
    rho: float,
    weights: Optional[Sequence[np.ndarray]] = None,
) -> ReducedKkt:
    """Build and factorize ``K_x`` for step size ``rho``.

    ``K_x = sigma I + sum_{l<p} rho_mu A_l^T (I - rho_mu W_l S_l^-1 W_l) A_l
    + A_p^T C_p A_p`` with ``C_p = rho_mu (I + rho rho_mu W_p^2)^-1``.

    Raises:
        NotPositiveDefiniteError: If ``K_x`` or a slack block is not
            positive definite.
    """
    blocks = level_blocks(problem, weights)
    p = len(blocks)
    if cache.depth < max(p - 2, 0):
        raise DimensionMismatchError(
            f"block inverse cache has depth {cache.depth}, {p - 2} required"
        )
    rho_mu, rho_eta, rho_phi = config.rho_mu, config.rho_eta, config.rho_phi

    K_static = config.sigma * np.eye(problem.n_x)
    S_inv: List[np.ndarray] = []
    G: List[np.ndarray] = []
    for index, block in enumerate(blocks[:-1]):
        scaled_A = block.A / block.w[:, None]
        S = (
            np.diag(rho_mu * block.w**2 + rho_phi)
            + rho_eta * scaled_A @ scaled_A.T
        )
        if index >= 1:
            G_l = rho_eta * block.A_prev @ scaled_A.T
            S = S - G_l.T @ cache.inverse(index) @ G_l
            G.append(G_l)
        S = 0.5 * (S + S.T)
        factor = sym_factorize(S)
        S_inv_l = sla.cho_solve((factor.chol, True), np.eye(block.m))
        S_inv_l = 0.5 * (S_inv_l + S_inv_l.T)
        S_inv.append(S_inv_l)

        reduced = np.eye(block.m) - rho_mu * (block.w[:, None] * S_inv_l * block.w[None, :])
        K_static = K_static + rho_mu * block.A.T @ reduced @ block.A

    K_static = 0.5 * (K_static + K_static.T)
    last = blocks[-1]
    K_x, factor, K_inv = _factorize(K_static + _last_level_term(last, config, rho))
    ops = build_operators(blocks, StackedLayout.of(problem), S_inv, G, cache, config)
    return ReducedKkt(
        K_x=K_x,
        factor=factor,
        rho=rho,
        K_static=K_static,
        S_inv=tuple(S_inv),
        G=tuple(G),
        cache=cache,
        blocks=blocks,
        ops=ops,
        K_inv=K_inv,
        last_weight=_last_level_weight(last, config, rho),
        last_gain=_last_level_gain(last, config, rho),
    )


def refactor_kkt(kkt: ReducedKkt, config: AdmmConfig, rho: float) -> ReducedKkt:
    """Re-factorize ``K_x`` for a new ``rho``, reusing every cached block."""
    last = kkt.blocks[-1]
    K_x, factor, K_inv = _factorize(kkt.K_static + _last_level_term(last, config, rho))
    return replace(
        kkt,
        K_x=K_x,
        factor=factor,
        K_inv=K_inv,
        rho=rho,
        last_weight=_last_level_weight(last, config, rho),
        last_gain=_last_level_gain(last, config, rho),
        factorizations=kkt.factorizations + 1,
    )


# ============================================================================
# Right-hand side and primal update
# ============================================================================


@dataclass
class RhsTerms:
    """``k_x`` and the stacked terms the back-substitution reuses.

    ``g`` covers the slacks of levels ``1 .. p-1`` and ``h_dual`` the
    primal-dual blocks of levels ``2 .. p-1``.
    """

    k_x: np.ndarray
    g: np.ndarray
    h_dual: np.ndarray
    h_last: np.ndarray


def assemble_rhs(kkt: ReducedKkt, state: StackedState, config: AdmmConfig) -> RhsTerms:
    """Right-hand side ``k_x`` of the reduced system.

    Uses matrix-vector products with the cached inverses only.
    """
    ops = kkt.ops
    head = ops.head
    rho_inv = 1.0 / kkt.rho
    w_head = ops.w[head]

    h_primal = (
        (w_head * state.mu_head - ops.A_blk_w @ state.eta - state.phi) * rho_inv
        + config.rho_phi * state.z
        - ops.h_const
    )
    h_dual = config.rho_eps_value * state.lam_tilde - (ops.A_prev_blk @ state.eta + state.nu) * rho_inv
    g = h_primal - ops.R @ h_dual
    h_last = ops.b[ops.last] - state.mu_last * (rho_inv / config.rho_mu)

    k_x = (
        config.sigma * state.x_tilde
        + ops.kx_const
        - (ops.A_head.T @ state.mu_head) * rho_inv
        + ops.Q @ g
        + ops.A_last.T @ (kkt.last_weight * h_last)
    )
    return RhsTerms(k_x=k_x, g=g, h_dual=h_dual, h_last=h_last)


def update_primal(
    kkt: ReducedKkt,
    state: StackedState,
    rhs: RhsTerms,
    config: AdmmConfig,
    timings: Optional[PhaseTimings] = None,
) -> StackedState:
    """Solve for ``x`` and recover ``v`` and ``lam`` in place.

    ``v_l = S_l^-1 (rho_mu W_l A_l x + g_l)`` for ``l < p``,
    ``v_p = rho rho_mu W_p (I + rho rho_mu W_p^2)^-1 (A_p x - h_p)`` and
    ``lam_l = M_{l-1}^-1 (h_dual_l - G_l v_l)``.
    """
    ops = kkt.ops
    start = time.perf_counter()
    x = kkt.K_inv @ rhs.k_x
    v_head = ops.SW @ x + ops.S_inv @ rhs.g
    v_last = kkt.last_gain * (ops.A_last @ x - rhs.h_last)
    mid = time.perf_counter()

    lam = ops.M_inv @ (rhs.h_dual - ops.G @ v_head)
    end = time.perf_counter()

    state.x = x
    state.v = np.concatenate((v_head, v_last))
    state.lam = lam
    if timings is not None:
        timings.solve += 1000.0 * (mid - start)
        timings.lam += 1000.0 * (end - mid)
    return state


# ============================================================================
# Split update
# ============================================================================


@dataclass
class SplitUpdate:
    """Splits before the update, needed by the relaxed dual ascent."""

    z_previous: np.ndarray
    lam_tilde_previous: np.ndarray
    root_seconds: float = 0.0


def _project_levels(
    kkt: ReducedKkt, a1: np.ndarray, a2: np.ndarray, config: AdmmConfig
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Level-by-level projection, for the interior-point path."""
    ops = kkt.ops
    layout = ops.layout
    a1_blocks = layout.split_rows(a1, head_only=True)
    a2_blocks = [np.zeros(0)] + layout.split_dual(a2)
    z_blocks, lam_blocks, theta = [], [], np.zeros(layout.p - 1)
    root_seconds = 0.0
    for index, block in enumerate(kkt.blocks[:-1]):
        data = ProjectionInput.build(
            a1=a1_blocks[index],
            b_hat=block.b_hat,
            a2=a2_blocks[index],
            b_prev=block.b_prev / ops.kappa,
        )
        try:
            result = project(data, config.projection, config.projection_tol)
        except HlspError as exc:
            raise ProjectionError(f"projection of level {index + 1} failed: {exc}") from exc
        z_blocks.append(result.z)
        if index >= 1:
            lam_blocks.append(result.lambda_tilde)
        theta[index] = result.theta
        root_seconds += result.root_seconds
    return (
        np.concatenate([np.zeros(0), *z_blocks]),
        np.concatenate([np.zeros(0), *lam_blocks]),
        theta,
        root_seconds,
    )


def update_splits(kkt: ReducedKkt, state: StackedState, config: AdmmConfig) -> SplitUpdate:
    """Project the over-relaxed candidates onto the per-level duality sets.

    ``a1 = alpha (v + b_hat) + (1 - alpha) z + phi / (rho rho_phi)`` and
    ``a2 = alpha lam + (1 - alpha) lam_tilde + nu / (rho rho_nu)``. When
    ``rho_phi != rho_nu`` the primal-dual coordinates are rescaled by
    ``kappa = sqrt(rho_nu / rho_phi)`` so the weighted projection becomes
    a Euclidean one.

    Raises:
        ProjectionError: If a level's projection fails.
    """
    ops = kkt.ops
    rho, alpha = kkt.rho, config.alpha
    previous = SplitUpdate(z_previous=state.z, lam_tilde_previous=state.lam_tilde)

    a1 = (
        alpha * (state.v_head + ops.b_hat)
        + (1.0 - alpha) * state.z
        + state.phi / (rho * config.rho_phi)
    )
    a2 = (
        alpha * state.lam
        + (1.0 - alpha) * state.lam_tilde
        + state.nu / (rho * config.rho_nu)
    )
    if ops.kappa != 1.0:
        a2 = ops.kappa * a2

    if config.projection == "cubic":
        result = project_stacked(ops.sets, a1, a2)
        z, lam_tilde, theta, root_seconds = result.z, result.lambda_tilde, result.theta, result.root_seconds
    else:
        z, lam_tilde, theta, root_seconds = _project_levels(kkt, a1, a2, config)

    state.z = z
    state.lam_tilde = lam_tilde / ops.kappa if ops.kappa != 1.0 else lam_tilde
    state.theta = theta
    previous.root_seconds = root_seconds
    return previous


# ============================================================================
# Dual ascent
# ============================================================================


def dual_ascent(
    kkt: ReducedKkt, state: StackedState, config: AdmmConfig, previous: SplitUpdate
) -> StackedState:
    """Over-relaxed multiplier steps, in place; also moves the prox centre ``x_tilde``."""
    ops = kkt.ops
    rho, alpha = kkt.rho, config.alpha
    v_head = state.v_head

    state.mu = state.mu + (rho * config.rho_mu * alpha) * (ops.A @ state.x - ops.b - ops.w * state.v)
    c_eta = ops.A_blk_w.T @ v_head + ops.A_prev_blk.T @ state.lam
    state.eta = state.eta + (rho * config.rho_eta * alpha) * c_eta

    relaxed_z = alpha * (v_head + ops.b_hat) + (1.0 - alpha) * previous.z_previous
    state.phi = state.phi + (rho * config.rho_phi) * (relaxed_z - state.z)
    relaxed_lam = alpha * state.lam + (1.0 - alpha) * previous.lam_tilde_previous
    state.nu = state.nu + (rho * config.rho_nu) * (relaxed_lam - state.lam_tilde)

    state.x_tilde = alpha * state.x + (1.0 - alpha) * state.x_tilde
    return state


# ============================================================================
# Residuals and step size
# ============================================================================


@dataclass(frozen=True)
class Residuals:
    """Stacked primal and dual residuals and their normalizations.

    ``k_prim`` stacks the mu, eta, phi and nu constraint violations;
    ``k_dual`` stacks the Lagrangian gradient with respect to ``x``, each
    slack and each primal-dual block.
    """

    k_prim: np.ndarray
    k_dual: np.ndarray
    norm: float
    prim_scale: float
    dual_scale: float

    @property
    def prim_inf(self) -> float:
        return float(np.max(np.abs(self.k_prim))) if self.k_prim.size else 0.0

    @property
    def dual_inf(self) -> float:
        return float(np.max(np.abs(self.k_dual))) if self.k_dual.size else 0.0


def _abs_max(*vectors: np.ndarray) -> float:
    stacked = np.concatenate(vectors)
    return float(np.max(np.abs(stacked))) if stacked.size else 0.0


def compute_residuals(kkt: ReducedKkt, state: StackedState) -> Residuals:
    ops = kkt.ops
    head, last = ops.head, ops.last
    v_head = state.v_head

    # mu: A x - b - W v
    Bq_mu = ops.A @ state.x - ops.w * state.v
    # eta: A^T W^-1 v + A_prev^T lam
    Bq_eta = ops.A_blk_w.T @ v_head + ops.A_prev_blk.T @ state.lam
    # phi: v + b_hat - z ; nu: lam - lam_tilde
    k_prim = np.concatenate(
        (Bq_mu - ops.b, Bq_eta, v_head + ops.b_hat - state.z, state.lam - state.lam_tilde)
    )
    prim_scale = _abs_max(Bq_mu, ops.b, Bq_eta, v_head, state.z - ops.b_hat, state.lam, state.lam_tilde)

    grad_x = ops.A.T @ state.mu
    grad_v = -ops.w[head] * state.mu_head + ops.A_blk_w @ state.eta + state.phi
    By_last = -ops.w[last] * state.mu_last
    grad_lam = ops.A_prev_blk @ state.eta + state.nu
    k_dual = np.concatenate((grad_x, grad_v, state.v_last + By_last, grad_lam))
    dual_scale = _abs_max(grad_x, grad_v, state.v_last, By_last, grad_lam)

    norm = math.sqrt(float(k_prim @ k_prim) + float(k_dual @ k_dual))
    return Residuals(
        k_prim=k_prim, k_dual=k_dual, norm=norm, prim_scale=prim_scale, dual_scale=dual_scale
    )


def update_rho(
    rho_factorized: float, residuals: Residuals, config: AdmmConfig
) -> Tuple[float, bool]:
    """Balance the scaled primal and dual residuals.

    The residuals were produced with ``rho_factorized``, so the correction
    ``sqrt((|k_prim| / prim_scale) / (|k_dual| / dual_scale))`` applies to
    it. The update is skipped when a denominator falls below ``1e-12``.

    Returns:
        The new step size and whether it left
        ``[rho_f / refactor_ratio, refactor_ratio * rho_f]``.
    """
    if not config.adaptive_rho:
        return rho_factorized, False
    if residuals.prim_scale < RHO_GUARD or residuals.dual_scale < RHO_GUARD:
        return rho_factorized, False
    dual_term = residuals.dual_inf / residuals.dual_scale
    prim_term = residuals.prim_inf / residuals.prim_scale
    if dual_term < RHO_GUARD or prim_term < RHO_GUARD:
        return rho_factorized, False

    rho = rho_factorized * math.sqrt(prim_term / dual_term)
    rho = min(max(rho, config.rho_min), config.rho_max)
    refactor = rho > config.refactor_ratio * rho_factorized or rho < rho_factorized / config.refactor_ratio
    return rho, refactor


# ============================================================================
# Best iterate
# ============================================================================


def level_objectives(kkt: ReducedKkt, state: StackedState) -> np.ndarray:
    """``0.5 ||A_l x - b_l||^2`` per level in original units.

    The equilibrated residual of a row is its original residual times the
    row weight, so dividing by ``w`` undoes the scaling.
    """
    ops = kkt.ops
    residual = (ops.A @ state.x - ops.b) / ops.w
    return 0.5 * np.bincount(ops.row_level, weights=residual * residual, minlength=ops.layout.p)


def lexicographically_better(
    candidate: Sequence[float], incumbent: Sequence[float], rel_tol: float
) -> Optional[bool]:
    """Compare per-level objectives in priority order.

    Two values tie when they differ by at most ``rel_tol * max(1, |value|)``.
    Returns None when every level ties.
    """
    for new, old in zip(candidate, incumbent):
        tol = rel_tol * max(1.0, abs(new), abs(old))
        if new < old - tol:
            return True
        if new > old + tol:
            return False
    return None


@dataclass
class Checkpoint:
    """A checked iterate kept as the fallback result of an unconverged run."""

    state: StackedState
    objectives: np.ndarray
    norm: float
    iteration: int = field(default=0, compare=False)

    def improves_on(self, other: "Checkpoint", rel_tol: float) -> bool:
        verdict = lexicographically_better(self.objectives, other.objectives, rel_tol)
        if verdict is None:
            return self.norm < other.norm
        return verdict


# ============================================================================
# Driver
# ============================================================================


def _scaled_solution(state: StackedState, problem: HlspProblem, kkt_residual: float) -> HlspSolution:
    lam = state.layout.split_dual(state.lam)
    return HlspSolution.from_primal(problem, state.x, lam=lam, kkt_residual=kkt_residual)


def run_admm(
    problem: HlspProblem,
    config: Optional[AdmmConfig] = None,
    warm_start: Optional[AdmmState] = None,
) -> Tuple[SolveReport, AdmmState]:
    """Solve ``problem`` and also return the final state in original units.

    Without convergence the result is the checked iterate that is best in
    priority order: lower objectives on higher levels win, residual norm
    breaks ties. A non-finite residual stops the run with status
    ``failed`` and an infinite residual norm.

    Args:
        problem: Hierarchy to solve.
        config: Solver parameters; defaults come from the settings.
        warm_start: Original-space state to start from instead of zeros.

    Raises:
        MaxItersExceededError: Only when ``config.raise_on_max_iters`` is set.
        NotPositiveDefiniteError: If the reduced system cannot be factorized.
    """
    config = config or AdmmConfig.from_settings()
    validate_problem(problem)
    started = time.perf_counter()
    timings = PhaseTimings()

    if config.precondition:
        scaled, scaling = precondition(problem, config.ruiz_iterations)
    else:
        scaled, scaling = problem, EquilibrationScaling.identity(problem)
    weights = [scaling.row_scale(level) for level in range(1, problem.p + 1)]

    if warm_start is not None:
        warm_start.check_dimensions(problem)
        start_state = scale_state(warm_start, scaling)
        rho = start_state.rho
    else:
        rho = config.rho_init
        start_state = AdmmState.zeros(problem, rho)

    t = time.perf_counter()
    cache = build_block_inverses(
        [level.A for level in scaled.levels],
        config.rho_eta,
        config.rho_eps_value,
        depth=max(problem.p - 2, 0),
    )
    kkt = assemble_reduced_kkt(scaled, config, cache, rho, weights)
    timings.kkt += 1000.0 * (time.perf_counter() - t)
    state = StackedState.from_state(start_state, kkt.ops.layout)

    logger.info(
        "admm_solve_started",
        p=problem.p,
        n_x=problem.n_x,
        rho=rho,
        warm_start=warm_start is not None,
    )

    residuals: Optional[Residuals] = None
    best: Optional[Checkpoint] = None
    refactor_count = 0
    refactor_gap = config.refactor_gap
    last_refactor = 0
    next_log = config.log_every
    status: SolveStatus = "max_iters"
    iterations = 0

    for iteration in range(1, config.max_iters + 1):
        iterations = iteration

        t = time.perf_counter()
        rhs = assemble_rhs(kkt, state, config)
        timings.rhs += 1000.0 * (time.perf_counter() - t)

        update_primal(kkt, state, rhs, config, timings)

        t = time.perf_counter()
        previous = update_splits(kkt, state, config)
        timings.proj += 1000.0 * (time.perf_counter() - t)
        timings.roots += 1000.0 * previous.root_seconds

        t = time.perf_counter()
        dual_ascent(kkt, state, config, previous)
        state.iter += 1
        timings.dual += 1000.0 * (time.perf_counter() - t)

        if iteration % config.check_every and iteration != config.max_iters:
            continue

        t = time.perf_counter()
        residuals = compute_residuals(kkt, state)
        timings.dual += 1000.0 * (time.perf_counter() - t)

        if not math.isfinite(residuals.norm):
            status = "failed"
            break
        if residuals.norm < config.chi:
            status = "converged"
            break

        checkpoint = Checkpoint(
            state=state, objectives=level_objectives(kkt, state), norm=residuals.norm, iteration=iteration
        )
        if best is None or checkpoint.improves_on(best, config.best_iterate_tol):
            checkpoint.state = state.copy()
            best = checkpoint

        if iteration >= next_log:
            next_log += config.log_every
            logger.debug("admm_iteration", iteration=iteration, residual=residuals.norm, rho=kkt.rho)

        new_rho, refactor = update_rho(kkt.rho, residuals, config)
        state.rho = new_rho
        if refactor and iteration - last_refactor >= refactor_gap:
            t = time.perf_counter()
            kkt = refactor_kkt(kkt, config, new_rho)
            timings.kkt += 1000.0 * (time.perf_counter() - t)
            refactor_count += 1
            last_refactor = iteration
            refactor_gap = int(math.ceil(refactor_gap * config.refactor_gap_growth))
            logger.debug("admm_refactorized", iteration=iteration, rho=new_rho, next_gap=refactor_gap)

    message = None
    if status == "converged":
        final, final_norm = state, residuals.norm
    elif status == "failed":
        final = best.state if best is not None else state
        final_norm = math.inf
        message = f"non-finite residual at iteration {iterations}"
    else:
        final, final_norm = best.state, best.norm
        message = (
            f"residual {final_norm:.3e} above chi {config.chi:.1e} after {iterations} iterations; "
            f"returning iterate {best.iteration}"
        )

    scaled_solution = _scaled_solution(final, scaled, final_norm)
    solution = unscale_solution(scaled_solution, scaling, problem)
    wall_time_ms = 1000.0 * (time.perf_counter() - started)

    if status == "max_iters" and config.raise_on_max_iters:
        raise MaxItersExceededError(message)

    report = SolveReport(
        solver="dhadm",
        status=status,
        solution=solution,
        iterations=iterations,
        residual_norm=final_norm,
        refactor_count=refactor_count,
        wall_time_ms=wall_time_ms,
        timings=timings,
        theta=[float(value) for value in final.theta],
        rho=kkt.rho,
        duality_gap=duality_gap_per_level(problem, solution).tolist(),
        message=message,
    )
    log = logger.warning if status == "failed" else logger.info
    log(
        "admm_solve_finished",
        p=problem.p,
        status=status,
        iterations=iterations,
        residual=final_norm,
        refactors=refactor_count,
        wall_time_ms=round(wall_time_ms, 3),
    )
    return report, unscale_state(final.to_state(), scaling)


def solve(
    problem: HlspProblem,
    config: Optional[AdmmConfig] = None,
    warm_start: Optional[AdmmState] = None,
) -> SolveReport:
    """Solve ``problem`` with the ADMM solver; see :func:`run_admm`."""
    report, _ = run_admm(problem, config, warm_start)
    return report
