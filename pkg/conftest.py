"""Shared fixtures: small hand-checkable hierarchies and seeded random ones."""

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT_DIR = Path(__file__).resolve().parent
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from src.hlsp_dual.core.problem import generate_random_hierarchy  # noqa: E402
from src.hlsp_dual.models.problem import HlspProblem  # noqa: E402


@pytest.fixture
def identity_problem() -> HlspProblem:
    """p=1, A=I (3x3): solution x = b."""
    return HlspProblem.from_arrays([np.eye(3)], [[1.0, -2.0, 0.5]])


@pytest.fixture
def orthogonal_problem() -> HlspProblem:
    """Two levels acting on separate variables: x = [1, 2], both objectives 0."""
    return HlspProblem.from_arrays([[[1.0, 0.0]], [[0.0, 1.0]]], [[1.0], [2.0]])


@pytest.fixture
def frozen_problem() -> HlspProblem:
    """Level 2 conflicts with level 1 on a single variable: x = 1, objectives [0, 8]."""
    return HlspProblem.from_arrays([[[1.0]], [[1.0]]], [[1.0], [5.0]])


@pytest.fixture
def tall_problem() -> HlspProblem:
    """p=2 with an over-determined, full-column-rank first level."""
    A1 = np.array([[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]])
    A2 = np.array([[1.0, -1.0], [0.5, 1.0]])
    return HlspProblem.from_arrays([A1, A2], [[1.0, -1.0, 0.5], [0.3, 2.0]])


@pytest.fixture
def full_rank_problem():
    """Factory of seeded full-rank random hierarchies."""

    def build(p: int, seed: int = 11, feasible: bool = False) -> HlspProblem:
        return generate_random_hierarchy(p, seed, full_rank=True, feasible=feasible)

    return build


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)


def pytest_configure(config) -> None:
    config.addinivalue_line("markers", "slow: seeded suites over p = 9 / p = 10 hierarchies")
