"""Iterates of the ADMM solver and their mapping to and from scaled space."""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..errors import DimensionMismatchError, ProblemParseError
from ..models.problem import HlspProblem
from .preconditioner import EquilibrationScaling


def _copy(blocks: List[np.ndarray]) -> List[np.ndarray]:
    return [block.copy() for block in blocks]


@dataclass
class AdmmState:
    """All ADMM iterates of one hierarchy.

    Index conventions (0-based lists, 1-based levels):

    - ``v[l-1]``, ``mu[l-1]`` for levels 1 .. p
    - ``z[l-1]``, ``eta[l-1]``, ``phi[l-1]``, ``theta[l-1]`` for levels 1 .. p-1
    - ``lam[l-2]``, ``lam_tilde[l-2]``, ``nu[l-2]`` for levels 2 .. p-1
    """

    x: np.ndarray
    x_tilde: np.ndarray
    v: List[np.ndarray]
    lam: List[np.ndarray]
    z: List[np.ndarray]
    lam_tilde: List[np.ndarray]
    mu: List[np.ndarray]
    eta: List[np.ndarray]
    phi: List[np.ndarray]
    nu: List[np.ndarray]
    rho: float
    iter: int = 0
    theta: List[float] = field(default_factory=list)

    @classmethod
    def zeros(cls, problem: HlspProblem, rho: float) -> "AdmmState":
        n = problem.n_x
        sizes = problem.level_sizes
        p = problem.p
        lower = range(2, p)
        return cls(
            x=np.zeros(n),
            x_tilde=np.zeros(n),
            v=[np.zeros(m) for m in sizes],
            lam=[np.zeros(problem.dual_dimension(l)) for l in lower],
            z=[np.zeros(m) for m in sizes[: p - 1]],
            lam_tilde=[np.zeros(problem.dual_dimension(l)) for l in lower],
            mu=[np.zeros(m) for m in sizes],
            eta=[np.zeros(n) for _ in range(p - 1)],
            phi=[np.zeros(m) for m in sizes[: p - 1]],
            nu=[np.zeros(problem.dual_dimension(l)) for l in lower],
            rho=rho,
            theta=[0.0] * (p - 1),
        )

    @property
    def p(self) -> int:
        return len(self.v)

    def copy(self) -> "AdmmState":
        return replace(
            self,
            x=self.x.copy(),
            x_tilde=self.x_tilde.copy(),
            v=_copy(self.v),
            lam=_copy(self.lam),
            z=_copy(self.z),
            lam_tilde=_copy(self.lam_tilde),
            mu=_copy(self.mu),
            eta=_copy(self.eta),
            phi=_copy(self.phi),
            nu=_copy(self.nu),
            theta=list(self.theta),
        )

    def check_dimensions(self, problem: HlspProblem) -> None:
        """Raise ``DimensionMismatchError`` if any block disagrees with ``problem``."""
        expected = AdmmState.zeros(problem, self.rho)
        for name, own, ref in self._named_blocks(expected):
            if own.shape != ref.shape:
                raise DimensionMismatchError(
                    f"state block {name} has shape {own.shape}, expected {ref.shape}"
                )

    def _named_blocks(self, other: "AdmmState"):
        if self.p != other.p:
            raise DimensionMismatchError(f"state has {self.p} levels, expected {other.p}")
        yield "x", self.x, other.x
        yield "x_tilde", self.x_tilde, other.x_tilde
        for attr, first in (
            ("v", 1), ("mu", 1), ("z", 1), ("eta", 1), ("phi", 1),
            ("lam", 2), ("lam_tilde", 2), ("nu", 2),
        ):
            own, ref = getattr(self, attr), getattr(other, attr)
            if len(own) != len(ref):
                raise DimensionMismatchError(f"state has {len(own)} {attr} blocks, expected {len(ref)}")
            for offset, (a, b) in enumerate(zip(own, ref)):
                yield f"{attr}_{first + offset}", a, b

    # ------------------------------------------------------------------
    # Flat named blocks, used by the text serialization
    # ------------------------------------------------------------------

    def to_blocks(self) -> Dict[str, np.ndarray]:
        blocks: Dict[str, np.ndarray] = {
            "rho": np.array([self.rho]),
            "iter": np.array([float(self.iter)]),
            "theta": np.asarray(self.theta, dtype=float),
            "x": self.x,
            "x_tilde": self.x_tilde,
        }
        for name, own, _ in self._named_blocks(self):
            if name not in ("x", "x_tilde"):
                blocks[name] = own
        return blocks

    @classmethod
    def from_blocks(cls, blocks: Dict[str, np.ndarray]) -> "AdmmState":
        def level_list(prefix: str, first: int) -> List[np.ndarray]:
            items = []
            level = first
            while f"{prefix}_{level}" in blocks:
                items.append(np.asarray(blocks[f"{prefix}_{level}"], dtype=float))
                level += 1
            return items

        try:
            rho = float(blocks["rho"][0])
            iteration = int(blocks["iter"][0])
            x = np.asarray(blocks["x"], dtype=float)
            x_tilde = np.asarray(blocks["x_tilde"], dtype=float)
        except (KeyError, IndexError) as exc:
            raise ProblemParseError(f"state is missing block {exc}") from exc

        return cls(
            x=x,
            x_tilde=x_tilde,
            v=level_list("v", 1),
            lam=level_list("lam", 2),
            z=level_list("z", 1),
            lam_tilde=level_list("lam_tilde", 2),
            mu=level_list("mu", 1),
            eta=level_list("eta", 1),
            phi=level_list("phi", 1),
            nu=level_list("nu", 2),
            rho=rho,
            iter=iteration,
            theta=[float(t) for t in blocks.get("theta", np.zeros(0))],
        )


# ============================================================================
# Scaling of states
# ============================================================================


def scale_state(state: AdmmState, scaling: EquilibrationScaling) -> AdmmState:
    """Map an original-space state into the equilibrated space.

    Slacks, ``z`` and ``phi`` keep their units. ``x`` divides by ``L_x``,
    primal-dual blocks by ``L_nu``; ``mu`` divides by the row scaling,
    ``eta`` by ``L_x`` and ``nu`` multiplies by ``L_nu``.
    """
    scaled = state.copy()
    scaled.x = state.x / scaling.L_x
    scaled.x_tilde = state.x_tilde / scaling.L_x
    scaled.mu = [mu / scaling.row_scale(l) for l, mu in enumerate(state.mu, start=1)]
    scaled.eta = [eta / scaling.L_x for eta in state.eta]
    scaled.lam = [scaling.scale_lambda(l, lam) for l, lam in enumerate(state.lam, start=2)]
    scaled.lam_tilde = [lam / scaling.L_nu(l) for l, lam in enumerate(state.lam_tilde, start=2)]
    scaled.nu = [nu * scaling.L_nu(l) for l, nu in enumerate(state.nu, start=2)]
    return scaled


def unscale_state(state: AdmmState, scaling: EquilibrationScaling) -> AdmmState:
    """Inverse of :func:`scale_state`."""
    original = state.copy()
    original.x = state.x * scaling.L_x
    original.x_tilde = state.x_tilde * scaling.L_x
    original.mu = [mu * scaling.row_scale(l) for l, mu in enumerate(state.mu, start=1)]
    original.eta = [eta * scaling.L_x for eta in state.eta]
    original.lam = [scaling.unscale_lambda(l, lam) for l, lam in enumerate(state.lam, start=2)]
    original.lam_tilde = [lam * scaling.L_nu(l) for l, lam in enumerate(state.lam_tilde, start=2)]
    original.nu = [nu / scaling.L_nu(l) for l, nu in enumerate(state.nu, start=2)]
    return original


# ============================================================================
# Stacked form used inside the iteration
# ============================================================================


@dataclass(frozen=True)
class StackedLayout:
    """Sizes of the per-level blocks once they are concatenated.

    ``v`` and ``mu`` stack all ``p`` levels, ``z`` and ``phi`` the first
    ``p - 1``, ``eta`` the first ``p - 1`` in blocks of ``n_x``, and
    ``lam``, ``lam_tilde``, ``nu`` the levels ``2 .. p-1``.
    """

    n_x: int
    sizes: Tuple[int, ...]
    dual_sizes: Tuple[int, ...]

    @classmethod
    def of(cls, problem: HlspProblem) -> "StackedLayout":
        return cls(
            n_x=problem.n_x,
            sizes=tuple(problem.level_sizes),
            dual_sizes=tuple(problem.dual_dimension(l) for l in range(2, problem.p)),
        )

    @property
    def p(self) -> int:
        return len(self.sizes)

    @property
    def rows(self) -> int:
        return sum(self.sizes)

    @property
    def head_rows(self) -> int:
        """Rows of the levels ``1 .. p-1``."""
        return sum(self.sizes[:-1])

    @property
    def dual_rows(self) -> int:
        return sum(self.dual_sizes)

    @staticmethod
    def _cuts(sizes: Sequence[int]) -> List[int]:
        return list(np.cumsum(sizes)[:-1]) if sizes else []

    def split_rows(self, vector: np.ndarray, head_only: bool = False) -> List[np.ndarray]:
        sizes = self.sizes[:-1] if head_only else self.sizes
        return [block.copy() for block in np.split(vector, self._cuts(sizes))] if sizes else []

    def split_eta(self, vector: np.ndarray) -> List[np.ndarray]:
        return [block.copy() for block in np.split(vector, self.p - 1)] if self.p > 1 else []

    def split_dual(self, vector: np.ndarray) -> List[np.ndarray]:
        if not self.dual_sizes:
            return []
        return [block.copy() for block in np.split(vector, self._cuts(self.dual_sizes))]


def _join(blocks: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([np.zeros(0), *blocks])


@dataclass
class StackedState:
    """The iterates of :class:`AdmmState` as flat vectors."""

    layout: StackedLayout
    x: np.ndarray
    x_tilde: np.ndarray
    v: np.ndarray
    lam: np.ndarray
    z: np.ndarray
    lam_tilde: np.ndarray
    mu: np.ndarray
    eta: np.ndarray
    phi: np.ndarray
    nu: np.ndarray
    theta: np.ndarray
    rho: float
    iter: int = 0

    @classmethod
    def from_state(cls, state: AdmmState, layout: StackedLayout) -> "StackedState":
        return cls(
            layout=layout,
            x=state.x.astype(float, copy=True),
            x_tilde=state.x_tilde.astype(float, copy=True),
            v=_join(state.v),
            lam=_join(state.lam),
            z=_join(state.z),
            lam_tilde=_join(state.lam_tilde),
            mu=_join(state.mu),
            eta=_join(state.eta),
            phi=_join(state.phi),
            nu=_join(state.nu),
            theta=np.asarray(state.theta, dtype=float).copy(),
            rho=state.rho,
            iter=state.iter,
        )

    def to_state(self) -> AdmmState:
        layout = self.layout
        return AdmmState(
            x=self.x.copy(),
            x_tilde=self.x_tilde.copy(),
            v=layout.split_rows(self.v),
            lam=layout.split_dual(self.lam),
            z=layout.split_rows(self.z, head_only=True),
            lam_tilde=layout.split_dual(self.lam_tilde),
            mu=layout.split_rows(self.mu),
            eta=layout.split_eta(self.eta),
            phi=layout.split_rows(self.phi, head_only=True),
            nu=layout.split_dual(self.nu),
            rho=self.rho,
            iter=self.iter,
            theta=[float(t) for t in self.theta],
        )

    @property
    def v_head(self) -> np.ndarray:
        return self.v[: self.layout.head_rows]

    @property
    def v_last(self) -> np.ndarray:
        return self.v[self.layout.head_rows :]

    @property
    def mu_head(self) -> np.ndarray:
        return self.mu[: self.layout.head_rows]

    @property
    def mu_last(self) -> np.ndarray:
        return self.mu[self.layout.head_rows :]

    def copy(self) -> "StackedState":
        return replace(
            self,
            x=self.x.copy(),
            x_tilde=self.x_tilde.copy(),
            v=self.v.copy(),
            lam=self.lam.copy(),
            z=self.z.copy(),
            lam_tilde=self.lam_tilde.copy(),
            mu=self.mu.copy(),
            eta=self.eta.copy(),
            phi=self.phi.copy(),
            nu=self.nu.copy(),
            theta=self.theta.copy(),
        )

    def is_finite(self) -> bool:
        return all(
            np.all(np.isfinite(block))
            for block in (self.x, self.v, self.lam, self.z, self.lam_tilde, self.mu, self.eta, self.phi, self.nu)
        )
