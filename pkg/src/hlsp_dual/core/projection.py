"""Projection onto the per-level duality set.

Each level ``l`` owns the convex set

    { (z, lam) : z^T z - b_hat^T b_hat + lam^T b_prev <= 0 }

where ``b_prev`` stacks the ``b`` vectors of all levels above ``l``. The
ADMM split update projects a candidate ``(a1, a2)`` onto it. Two paths are
provided:

- ``project_cubic``: closed form through the real roots of a cubic in the
  multiplier ``theta`` (identity scalings only).
- ``project_ipm``: a primal-dual interior-point iteration whose Newton step
  reduces to one scalar equation, so no matrix is ever factorized. It also
  handles positive diagonal scalings of ``z`` and ``lam``.
- ``project_stacked``: the cubic path for all levels at once, on stacked
  vectors; this is what the ADMM iteration calls.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from ..errors import InvalidParameterError, MaxItersExceededError, ProjectionError
from ..logging_config import get_logger
from .linalg import cubic_real_roots, largest_real_root_monic

logger = get_logger("core.projection")

FEASIBILITY_TOL = 1e-10
DEGENERATE_TOL = 1e-14

IPM_MU0 = 1.0
IPM_MU_FACTOR = 0.2
IPM_MU_MIN = 1e-14
IPM_TAU = 0.995
IPM_TOL = 1e-10
IPM_MAX_ITERS = 200

ProjectionPath = Literal["cubic", "ipm"]


@dataclass(frozen=True)
class ProjectionInput:
    """Candidate point of one level and the data defining its duality set.

    ``a2`` and ``b_prev`` are empty for the first level. ``v_phi`` and
    ``v_nu`` are the diagonals of optional positive scalings of ``z`` and
    ``lam``; None means identity.
    """

    a1: np.ndarray
    a2: np.ndarray
    b_hat: np.ndarray
    b_prev: np.ndarray
    v_phi: Optional[np.ndarray] = None
    v_nu: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.a1.shape != self.b_hat.shape:
            raise InvalidParameterError(
                f"a1 has shape {self.a1.shape}, b_hat has shape {self.b_hat.shape}"
            )
        if self.a2.shape != self.b_prev.shape:
            raise InvalidParameterError(
                f"a2 has shape {self.a2.shape}, b_prev has shape {self.b_prev.shape}"
            )
        for name, diag, size in (("v_phi", self.v_phi, self.a1.shape[0]), ("v_nu", self.v_nu, self.a2.shape[0])):
            if diag is None:
                continue
            if diag.shape != (size,) or not np.all(diag > 0) or not np.all(np.isfinite(diag)):
                raise InvalidParameterError(f"{name} must be a positive diagonal of length {size}")

    @classmethod
    def build(
        cls,
        a1,
        b_hat,
        a2=None,
        b_prev=None,
        v_phi=None,
        v_nu=None,
    ) -> "ProjectionInput":
        def vec(value) -> np.ndarray:
            return np.zeros(0) if value is None else np.asarray(value, dtype=float).reshape(-1)

        return cls(
            a1=vec(a1),
            a2=vec(a2),
            b_hat=vec(b_hat),
            b_prev=vec(b_prev),
            v_phi=None if v_phi is None else vec(v_phi),
            v_nu=None if v_nu is None else vec(v_nu),
        )

    @property
    def has_identity_scaling(self) -> bool:
        return (self.v_phi is None or np.all(self.v_phi == 1.0)) and (
            self.v_nu is None or np.all(self.v_nu == 1.0)
        )


@dataclass(frozen=True)
class ProjectionResult:
    z: np.ndarray
    lambda_tilde: np.ndarray
    theta: float
    path: ProjectionPath
    iterations: int = 0
    root_seconds: float = field(default=0.0, compare=False)


def constraint_value(z: np.ndarray, lam: np.ndarray, b_hat: np.ndarray, b_prev: np.ndarray) -> float:
    """``z^T z - b_hat^T b_hat + lam^T b_prev``; non-positive inside the set."""
    return float(z @ z - b_hat @ b_hat + lam @ b_prev)


# ============================================================================
# Cubic path
# ============================================================================


def _enforce_feasibility(
    z: np.ndarray, lam: np.ndarray, b_hat: np.ndarray, b_prev: np.ndarray
) -> np.ndarray:
    """Shrink ``z`` radially when rounding left the point just outside."""
    if constraint_value(z, lam, b_hat, b_prev) <= 0.0:
        return z
    radius_sq = float(b_hat @ b_hat - lam @ b_prev)
    norm_sq = float(z @ z)
    if radius_sq <= 0.0 or norm_sq == 0.0:
        return np.zeros_like(z) if radius_sq <= 0.0 else z
    return z * math.sqrt(radius_sq / norm_sq)


def project_cubic(data: ProjectionInput) -> ProjectionResult:
    """Euclidean projection of ``(a1, a2)`` onto the level's duality set.

    Stationarity gives ``z = a1 / (1 + 2 theta)`` and
    ``lam = a2 - theta b_prev``; substituting into the active constraint
    yields a cubic in ``theta``. Among its non-negative roots the feasible
    one with the smallest distance is returned.

    Raises:
        InvalidParameterError: If the input carries non-identity scalings.
        ProjectionError: If no root yields a feasible point.
    """
    if not data.has_identity_scaling:
        raise InvalidParameterError("the cubic projection requires identity scalings")

    a1, a2, b_hat, b_prev = data.a1, data.a2, data.b_hat, data.b_prev
    d1 = float(b_prev @ b_prev)
    d2 = float(b_hat @ b_hat - a2 @ b_prev)
    d3 = float(a1 @ a1)
    scale = max(1.0, abs(d1), abs(d2), d3)

    if d3 - d2 <= 0.0:
        return ProjectionResult(z=a1.copy(), lambda_tilde=a2.copy(), theta=0.0, path="cubic")

    if d1 <= DEGENERATE_TOL * scale:
        if d2 > 0.0:
            # Ball of radius sqrt(d2); lam is left unchanged.
            ratio = math.sqrt(d2 / d3)
            theta = 0.5 * (1.0 / ratio - 1.0)
            z = _enforce_feasibility(a1 * ratio, a2, b_hat, b_prev)
            return ProjectionResult(z=z, lambda_tilde=a2.copy(), theta=theta, path="cubic")
        if d1 == 0.0:
            # b_hat = 0: the set collapses to z = 0; theta has no finite value.
            return ProjectionResult(
                z=np.zeros_like(a1), lambda_tilde=a2.copy(), theta=0.0, path="cubic"
            )

    def g(theta: float) -> float:
        return d3 / (1.0 + 2.0 * theta) ** 2 - d2 - theta * d1

    def g_prime(theta: float) -> float:
        return -4.0 * d3 / (1.0 + 2.0 * theta) ** 3 - d1

    start = time.perf_counter()
    roots = cubic_real_roots(d3 - d2, -(4.0 * d2 + d1), -(4.0 * d2 + 4.0 * d1), -4.0 * d1)
    root_seconds = time.perf_counter() - start

    best: Optional[ProjectionResult] = None
    best_distance = math.inf
    for root in roots:
        theta = max(0.0, root)
        for _ in range(3):
            slope = g_prime(theta)
            if slope == 0.0:
                break
            theta = max(0.0, theta - g(theta) / slope)
        z = a1 / (1.0 + 2.0 * theta)
        lam = a2 - theta * b_prev
        if constraint_value(z, lam, b_hat, b_prev) > FEASIBILITY_TOL * scale:
            continue
        z = _enforce_feasibility(z, lam, b_hat, b_prev)
        distance = float((z - a1) @ (z - a1) + (lam - a2) @ (lam - a2))
        if distance < best_distance:
            best_distance = distance
            best = ProjectionResult(
                z=z, lambda_tilde=lam, theta=theta, path="cubic", root_seconds=root_seconds
            )

    if best is None:
        raise ProjectionError(
            f"no feasible root among {roots} (d1={d1:.3e}, d2={d2:.3e}, d3={d3:.3e})"
        )
    return best


# ============================================================================
# Cubic path, all levels at once
# ============================================================================


@dataclass(frozen=True)
class StackedSets:
    """Duality sets of several levels with their data stacked.

    Entry ``i`` of a ``z`` stack belongs to level ``z_level[i]`` and entry
    ``j`` of a ``lam`` stack to level ``lam_level[j]``. Levels count from
    0; a level may own no ``lam`` entries.
    """

    b_hat: np.ndarray
    b_prev: np.ndarray
    z_level: np.ndarray
    lam_level: np.ndarray
    b_hat_sq: np.ndarray
    b_prev_sq: np.ndarray

    @classmethod
    def build(
        cls, b_hat_blocks: Sequence[np.ndarray], b_prev_blocks: Sequence[np.ndarray]
    ) -> "StackedSets":
        if len(b_hat_blocks) != len(b_prev_blocks):
            raise InvalidParameterError(
                f"{len(b_hat_blocks)} b_hat blocks but {len(b_prev_blocks)} b_prev blocks"
            )
        levels = np.arange(len(b_hat_blocks))
        z_level = np.repeat(levels, [len(block) for block in b_hat_blocks])
        lam_level = np.repeat(levels, [len(block) for block in b_prev_blocks])
        b_hat = np.concatenate([np.zeros(0), *b_hat_blocks])
        b_prev = np.concatenate([np.zeros(0), *b_prev_blocks])
        size = len(b_hat_blocks)
        return cls(
            b_hat=b_hat,
            b_prev=b_prev,
            z_level=z_level,
            lam_level=lam_level,
            b_hat_sq=np.bincount(z_level, weights=b_hat * b_hat, minlength=size),
            b_prev_sq=np.bincount(lam_level, weights=b_prev * b_prev, minlength=size),
        )

    @property
    def levels(self) -> int:
        return int(self.b_hat_sq.shape[0])

    def z_sum(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.z_level, weights=values, minlength=self.levels)

    def lam_sum(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.lam_level, weights=values, minlength=self.levels)

    def constraint_values(self, z: np.ndarray, lam: np.ndarray) -> np.ndarray:
        """Per-level ``z^T z - b_hat^T b_hat + lam^T b_prev``."""
        return self.z_sum(z * z) - self.b_hat_sq + self.lam_sum(lam * self.b_prev)


@dataclass(frozen=True)
class StackedProjection:
    z: np.ndarray
    lambda_tilde: np.ndarray
    theta: np.ndarray
    root_seconds: float = field(default=0.0, compare=False)


def project_stacked(sets: StackedSets, a1: np.ndarray, a2: np.ndarray) -> StackedProjection:
    """Euclidean projection of every level's ``(a1, a2)`` block in one pass.

    Same cases as :func:`project_cubic`: inactive levels are returned
    unchanged, levels without a usable ``b_prev`` are projected onto a
    ball, and the rest solve the cubic in ``s = 1 + 2 theta``,
    ``d1 s^3 + (2 d2 - d1) s^2 - 2 d3 = 0``, whose only positive root is
    its largest real one.

    Raises:
        ProjectionError: If a level ends outside its set.
    """
    d1 = sets.b_prev_sq
    d2 = sets.b_hat_sq - sets.lam_sum(a2 * sets.b_prev)
    d3 = sets.z_sum(a1 * a1)
    scale = np.maximum(np.maximum(1.0, np.abs(d1)), np.maximum(np.abs(d2), d3))

    active = d3 - d2 > 0.0
    flat = d1 <= DEGENERATE_TOL * scale
    ball = active & flat & (d2 > 0.0)
    collapsed = active & flat & (d2 <= 0.0) & (d1 == 0.0)
    curved = active & ~ball & ~collapsed

    start = time.perf_counter()
    theta = np.zeros(sets.levels)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where(ball, 0.5 * (np.sqrt(d3 / d2) - 1.0), theta)
        if curved.any():
            lead = np.where(curved, d1, 1.0)
            s = largest_real_root_monic((2.0 * d2 - lead) / lead, np.zeros_like(lead), -2.0 * d3 / lead)
            t = np.maximum(0.0, 0.5 * (s - 1.0))
            for _ in range(3):
                shrink = 1.0 + 2.0 * t
                g = d3 / shrink**2 - d2 - t * d1
                slope = -4.0 * d3 / shrink**3 - d1
                t = np.where(slope != 0.0, np.maximum(0.0, t - g / slope), t)
            theta = np.where(curved, t, theta)
    root_seconds = time.perf_counter() - start

    z = a1 / (1.0 + 2.0 * theta)[sets.z_level]
    z[collapsed[sets.z_level]] = 0.0
    lam = a2 - np.where(curved, theta, 0.0)[sets.lam_level] * sets.b_prev

    values = sets.constraint_values(z, lam)
    broken = curved & (values > FEASIBILITY_TOL * scale)
    if broken.any():
        level = int(np.flatnonzero(broken)[0])
        raise ProjectionError(
            f"level block {level} left outside its set "
            f"(d1={d1[level]:.3e}, d2={d2[level]:.3e}, d3={d3[level]:.3e})"
        )

    outside = (ball | curved) & (values > 0.0)
    if outside.any():
        # radial shrink, as _enforce_feasibility does per level
        radius_sq = sets.b_hat_sq - sets.lam_sum(lam * sets.b_prev)
        norm_sq = sets.z_sum(z * z)
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = np.where(
                radius_sq <= 0.0, 0.0, np.where(norm_sq == 0.0, 1.0, np.sqrt(radius_sq / norm_sq))
            )
        z = z * np.where(outside, factor, 1.0)[sets.z_level]

    return StackedProjection(z=z, lambda_tilde=lam, theta=theta, root_seconds=root_seconds)


# ============================================================================
# Interior-point path
# ============================================================================


def _ipm_residual(
    data: ProjectionInput,
    phi_sq: np.ndarray,
    nu_sq: np.ndarray,
    z: np.ndarray,
    lam: np.ndarray,
    w: float,
    theta: float,
    mu: float,
):
    phi = np.sqrt(phi_sq)
    nu = np.sqrt(nu_sq)
    k_z = (phi_sq + 2.0 * theta) * z - phi * data.a1
    k_lam = nu_sq * lam - nu * data.a2 + theta * data.b_prev
    k_w = theta * w - mu
    k_theta = constraint_value(z, lam, data.b_hat, data.b_prev) + w
    return k_z, k_lam, k_w, k_theta


def _residual_norm(k_z, k_lam, k_w, k_theta) -> float:
    return math.sqrt(float(k_z @ k_z + k_lam @ k_lam) + k_w * k_w + k_theta * k_theta)


def _max_step(value: float, step: float, tau: float) -> float:
    return min(1.0, -tau * value / step) if step < 0.0 else 1.0


def project_ipm(
    data: ProjectionInput,
    tol: float = IPM_TOL,
    max_iters: int = IPM_MAX_ITERS,
    mu0: float = IPM_MU0,
    mu_factor: float = IPM_MU_FACTOR,
    tau: float = IPM_TAU,
) -> ProjectionResult:
    """Scaled projection by a factorization-free primal-dual interior-point method.

    Minimizes ``0.5 ||V_phi z - a1||^2 + 0.5 ||V_nu lam - a2||^2`` over the
    duality set, with a log barrier on the slack ``w`` of the constraint.
    The Newton system is reduced to the scalar ``d_theta = t2 / t1`` and
    three back-substitutions. A fraction-to-boundary rule keeps ``w`` and
    ``theta`` positive; the barrier weight shrinks by ``mu_factor`` once
    the current barrier problem is solved to ``10 mu``.

    Args:
        data: Candidate point and set data; scalings default to identity.
        tol: Stop when the barrier-free KKT residual norm is at most ``tol``.
        max_iters: Newton step budget.

    Raises:
        MaxItersExceededError: If the budget is exhausted first.
    """
    m = data.a1.shape[0]
    n = data.a2.shape[0]
    phi_sq = np.ones(m) if data.v_phi is None else data.v_phi**2
    nu_sq = np.ones(n) if data.v_nu is None else data.v_nu**2

    # Start from the unconstrained minimizer with a strictly positive slack.
    z = (data.a1 / np.sqrt(phi_sq)).copy()
    lam = (data.a2 / np.sqrt(nu_sq)).copy()
    theta = 1.0
    w = max(1.0, -constraint_value(z, lam, data.b_hat, data.b_prev))
    mu = mu0

    for iteration in range(1, max_iters + 1):
        k_z, k_lam, k_w, k_theta = _ipm_residual(data, phi_sq, nu_sq, z, lam, w, theta, mu)
        kkt_norm = _residual_norm(k_z, k_lam, theta * w, k_theta)
        if kkt_norm <= tol:
            return ProjectionResult(
                z=z, lambda_tilde=lam, theta=theta, path="ipm", iterations=iteration - 1
            )
        if _residual_norm(k_z, k_lam, k_w, k_theta) <= 10.0 * mu:
            mu = max(mu * mu_factor, IPM_MU_MIN)
            k_w = theta * w - mu

        d_inv = 1.0 / (phi_sq + 2.0 * theta)
        t1 = 4.0 * float(z @ (d_inv * z)) + float(data.b_prev @ (data.b_prev / nu_sq)) + w / theta
        t2 = (
            -2.0 * float(z @ (d_inv * k_z))
            - float(data.b_prev @ (k_lam / nu_sq))
            - k_w / theta
            + k_theta
        )
        d_theta = t2 / t1
        d_z = d_inv * (-2.0 * z * d_theta - k_z)
        d_w = (-w * d_theta - k_w) / theta
        d_lam = (-data.b_prev * d_theta - k_lam) / nu_sq

        alpha = min(_max_step(theta, d_theta, tau), _max_step(w, d_w, tau))
        z = z + alpha * d_z
        lam = lam + alpha * d_lam
        w = w + alpha * d_w
        theta = theta + alpha * d_theta

    raise MaxItersExceededError(
        f"interior-point projection did not reach tolerance {tol:.1e} in {max_iters} steps"
    )


def project(
    data: ProjectionInput, method: ProjectionPath = "cubic", tol: float = IPM_TOL
) -> ProjectionResult:
    if method == "cubic":
        return project_cubic(data)
    if method == "ipm":
        return project_ipm(data, tol=tol)
    raise InvalidParameterError(f"unknown projection method {method!r}")

