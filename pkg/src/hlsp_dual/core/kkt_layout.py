"""Index map of the stacked primal-dual vector of a hierarchy.

The interior-point system and the differential system both stack

    x, then per level l < p a group of blocks, then v_p, mu_p,
    then the primal-dual blocks lambda_2 .. lambda_{p-1}

and differ only in the blocks of the per-level group and their order.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, Sequence, Tuple

import numpy as np

from ..errors import DimensionMismatchError, InvalidParameterError
from ..models.problem import HlspProblem

BlockKey = Tuple[str, int]

IPM_LEVEL_BLOCKS: Tuple[str, ...] = ("v", "mu", "eta", "theta", "w")
DIFFERENTIAL_LEVEL_BLOCKS: Tuple[str, ...] = ("v", "mu", "theta", "eta")


def _block_size(problem: HlspProblem, name: str, level: int) -> int:
    if name in ("v", "mu"):
        return problem.level_sizes[level - 1]
    if name == "eta":
        return problem.n_x
    if name in ("theta", "w"):
        return 1
    if name == "lam":
        return problem.dual_dimension(level)
    raise InvalidParameterError(f"unknown block {name!r}")


@dataclass(frozen=True)
class KktLayout:
    """Offsets of every named block; ``x`` is stored under level 0."""

    slices: Dict[BlockKey, slice]
    level_blocks: Tuple[str, ...]
    p: int
    n_x: int
    dimension: int
    order: Tuple[BlockKey, ...] = field(default=())

    @classmethod
    def build(cls, problem: HlspProblem, level_blocks: Sequence[str] = IPM_LEVEL_BLOCKS) -> "KktLayout":
        p = problem.p
        order = [("x", 0)]
        for level in range(1, p):
            order.extend((name, level) for name in level_blocks)
        order.extend([("v", p), ("mu", p)])
        order.extend(("lam", level) for level in range(2, p))

        slices: Dict[BlockKey, slice] = {}
        offset = 0
        for name, level in order:
            size = problem.n_x if name == "x" else _block_size(problem, name, level)
            slices[(name, level)] = slice(offset, offset + size)
            offset += size
        return cls(
            slices=slices,
            level_blocks=tuple(level_blocks),
            p=p,
            n_x=problem.n_x,
            dimension=offset,
            order=tuple(order),
        )

    def __getitem__(self, key: BlockKey) -> slice:
        try:
            return self.slices[key]
        except KeyError as exc:
            raise InvalidParameterError(f"layout has no block {key[0]}_{key[1]}") from exc

    def has(self, name: str, level: int) -> bool:
        return (name, level) in self.slices

    @property
    def x(self) -> slice:
        return self.slices[("x", 0)]

    def index(self, name: str, level: int) -> int:
        """Position of a scalar block (``theta`` or ``w``)."""
        return self[(name, level)].start

    def blocks(self) -> Iterator[Tuple[BlockKey, slice]]:
        for key in self.order:
            yield key, self.slices[key]

    def get(self, vector: np.ndarray, name: str, level: int = 0) -> np.ndarray:
        return vector[self[(name, level)]]

    def zeros(self) -> np.ndarray:
        return np.zeros(self.dimension)

    def check(self, vector: np.ndarray) -> None:
        if vector.shape != (self.dimension,):
            raise DimensionMismatchError(
                f"stacked vector has shape {vector.shape}, layout expects ({self.dimension},)"
            )
