"""Unit tests for the problem and state text files."""

import numpy as np
import pytest

from src.hlsp_dual.core.admm_state import AdmmState
from src.hlsp_dual.core.problem import generate_random_hierarchy
from src.hlsp_dual.errors import DimensionMismatchError, ProblemIOError, ProblemParseError
from src.hlsp_dual.tools.problem_io import (
    dump_problem,
    format_decimal,
    load_blocks,
    load_problem,
    load_state,
    parse_problem,
    save_blocks,
    save_problem,
    save_state,
)


class TestProblemFiles:
    """Tests for dump/parse/save/load of problems."""

    def test_save_and_load_preserve_every_bit(self, tmp_path):
        problem = generate_random_hierarchy(4, seed=21)
        path = tmp_path / "problem.txt"
        save_problem(problem, path)
        assert load_problem(path) == problem

    def test_header_and_layout(self, frozen_problem):
        lines = dump_problem(frozen_problem).splitlines()
        assert lines[0] == "2 1"
        assert lines[1] == "1"
        assert lines[2] == "1"
        assert lines[3] == "1"

    def test_blank_lines_are_ignored(self):
        problem = parse_problem("1 2\n\n1\n1 0\n\n3\n")
        np.testing.assert_array_equal(problem.levels[0].A, [[1.0, 0.0]])
        np.testing.assert_array_equal(problem.levels[0].b, [3.0])

    def test_truncated_file(self):
        with pytest.raises(ProblemParseError):
            parse_problem("2 2\n1\n1 0\n1\n")

    def test_malformed_number(self):
        with pytest.raises(ProblemParseError):
            parse_problem("1 2\n1\n1 abc\n3\n")

    def test_row_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            parse_problem("1 2\n1\n1 0 5\n3\n")

    def test_trailing_content(self):
        with pytest.raises(ProblemParseError):
            parse_problem("1 1\n1\n1\n3\n7\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ProblemIOError):
            load_problem(tmp_path / "absent.txt")

    def test_format_decimal_round_trips(self):
        value = 0.1 + 0.2
        assert float(format_decimal(value)) == value


class TestStateFiles:
    """Tests for the named-block state files."""

    def test_blocks_round_trip_with_empty_block(self, tmp_path):
        blocks = {"a": np.array([1.5, -2.0]), "empty": np.zeros(0), "b": np.array([3.0])}
        path = tmp_path / "blocks.txt"
        save_blocks(blocks, path)
        loaded = load_blocks(path)
        assert list(loaded) == ["a", "empty", "b"]
        np.testing.assert_array_equal(loaded["a"], blocks["a"])
        assert loaded["empty"].shape == (0,)

    def test_length_mismatch(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("hlsp-state 1\nx 3\n1 2\n", encoding="utf-8")
        with pytest.raises(DimensionMismatchError):
            load_blocks(path)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("x 1\n1\n", encoding="utf-8")
        with pytest.raises(ProblemParseError):
            load_blocks(path)

    def test_admm_state_round_trip(self, tmp_path):
        problem = generate_random_hierarchy(4, seed=2)
        state = AdmmState.zeros(problem, rho=0.25)
        rng = np.random.default_rng(0)
        state.x = rng.standard_normal(problem.n_x)
        state.lam[1] = rng.standard_normal(state.lam[1].shape[0])
        state.theta = [0.5, 0.0, 2.0]
        state.iter = 17

        path = tmp_path / "state.txt"
        save_state(state, path)
        loaded = load_state(path)

        loaded.check_dimensions(problem)
        assert loaded.rho == 0.25
        assert loaded.iter == 17
        assert loaded.theta == [0.5, 0.0, 2.0]
        np.testing.assert_array_equal(loaded.x, state.x)
        np.testing.assert_array_equal(loaded.lam[1], state.lam[1])
