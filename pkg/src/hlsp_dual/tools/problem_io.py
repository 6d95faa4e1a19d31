"""Line-oriented decimal text files for problems and warm-start states.

Problem file::

    p n_x
    m_1
    <m_1 rows of A_1, n_x decimals each>
    <one line with the m_1 entries of b_1>
    m_2
    ...

State file: a header line ``hlsp-state <n_blocks>``, then per block a line
``<name> <length>`` followed by one line holding the entries.

Decimals are written with 17 significant digits so values survive a
save/load round trip bit for bit.
"""

from pathlib import Path
from typing import Dict, Iterator, List, Union

import numpy as np

from ..core.admm_state import AdmmState
from ..errors import DimensionMismatchError, ProblemIOError, ProblemParseError
from ..logging_config import get_logger
from ..models.problem import HlspProblem, LevelData

logger = get_logger("tools.problem_io")

PathLike = Union[str, Path]
STATE_HEADER = "hlsp-state"


def format_decimal(value: float) -> str:
    return f"{float(value):.17g}"


def _format_row(values: np.ndarray) -> str:
    return " ".join(format_decimal(value) for value in np.asarray(values).reshape(-1))


def _write_text(path: PathLike, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ProblemIOError(f"cannot write {path}: {exc}") from exc


class _LineReader:
    def __init__(self, lines: List[str], path: PathLike) -> None:
        self._lines: Iterator[str] = iter(lines)
        self._path = path
        self.line_no = 0

    def next_line(self, what: str) -> str:
        try:
            line = next(self._lines)
        except StopIteration as exc:
            raise ProblemParseError(f"{self._path}: unexpected end of file, expected {what}") from exc
        self.line_no += 1
        return line

    def ints(self, what: str, count: int) -> List[int]:
        tokens = self.next_line(what).split()
        if len(tokens) != count:
            raise ProblemParseError(
                f"{self._path}:{self.line_no}: expected {count} integer(s) for {what}"
            )
        try:
            return [int(token) for token in tokens]
        except ValueError as exc:
            raise ProblemParseError(f"{self._path}:{self.line_no}: malformed {what}") from exc

    def floats(self, what: str) -> np.ndarray:
        line = self.next_line(what)
        try:
            return np.array([float(token) for token in line.split()], dtype=float)
        except ValueError as exc:
            raise ProblemParseError(f"{self._path}:{self.line_no}: malformed {what}") from exc

    def exhausted(self) -> bool:
        return next(self._lines, None) is None


# ============================================================================
# Problems
# ============================================================================


def dump_problem(problem: HlspProblem) -> str:
    lines = [f"{problem.p} {problem.n_x}"]
    for level in problem.levels:
        lines.append(str(level.m))
        lines.extend(_format_row(row) for row in level.A)
        lines.append(_format_row(level.b))
    return "\n".join(lines) + "\n"


def parse_problem(text: str, source: PathLike = "<string>") -> HlspProblem:
    """Parse the problem text format.

    Raises:
        ProblemParseError: On missing or malformed tokens.
        DimensionMismatchError: When row lengths disagree with the header.
    """
    reader = _LineReader([line.strip() for line in text.splitlines() if line.strip()], source)
    p, n_x = reader.ints("header 'p n_x'", 2)
    if p < 1 or n_x < 1:
        raise ProblemParseError(f"{source}: header must have p >= 1 and n_x >= 1")

    levels: List[LevelData] = []
    for index in range(1, p + 1):
        (m,) = reader.ints(f"row count of level {index}", 1)
        if m < 1:
            raise DimensionMismatchError(f"{source}: level {index} declares {m} rows")
        rows = [reader.floats(f"row {r + 1} of A_{index}") for r in range(m)]
        for r, row in enumerate(rows, start=1):
            if row.shape[0] != n_x:
                raise DimensionMismatchError(
                    f"{source}: row {r} of A_{index} has {row.shape[0]} entries, expected {n_x}"
                )
        b = reader.floats(f"b_{index}")
        if b.shape[0] != m:
            raise DimensionMismatchError(
                f"{source}: b_{index} has {b.shape[0]} entries, expected {m}"
            )
        levels.append(LevelData(A=np.vstack(rows), b=b))

    if not reader.exhausted():
        raise ProblemParseError(f"{source}: trailing content after level {p}")
    return HlspProblem(levels=levels, n_x=n_x)


def save_problem(problem: HlspProblem, path: PathLike) -> None:
    _write_text(path, dump_problem(problem))
    logger.info("problem_saved", path=str(path), p=problem.p, n_x=problem.n_x)


def load_problem(path: PathLike) -> HlspProblem:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemIOError(f"cannot read {path}: {exc}") from exc
    problem = parse_problem(text, source=str(path))
    logger.info("problem_loaded", path=str(path), p=problem.p, n_x=problem.n_x)
    return problem


# ============================================================================
# Named vector blocks (solver states)
# ============================================================================


def save_blocks(blocks: Dict[str, np.ndarray], path: PathLike) -> None:
    lines = [f"{STATE_HEADER} {len(blocks)}"]
    for name, values in blocks.items():
        if any(ch.isspace() for ch in name):
            raise ProblemIOError(f"block name {name!r} contains whitespace")
        flat = np.asarray(values, dtype=float).reshape(-1)
        lines.append(f"{name} {flat.shape[0]}")
        lines.append(_format_row(flat))
    _write_text(path, "\n".join(lines) + "\n")


def load_blocks(path: PathLike) -> Dict[str, np.ndarray]:
    # Empty blocks are written as an empty line, so blank lines are kept here.
    try:
        raw = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ProblemIOError(f"cannot read {path}: {exc}") from exc

    if not raw:
        raise ProblemParseError(f"{path}: empty state file")
    header = raw[0].split()
    if len(header) != 2 or header[0] != STATE_HEADER:
        raise ProblemParseError(f"{path}: missing '{STATE_HEADER} <count>' header")
    try:
        count = int(header[1])
    except ValueError as exc:
        raise ProblemParseError(f"{path}: malformed block count") from exc

    blocks: Dict[str, np.ndarray] = {}
    cursor = 1
    for _ in range(count):
        if cursor >= len(raw):
            raise ProblemParseError(f"{path}: unexpected end of file")
        tokens = raw[cursor].split()
        if len(tokens) != 2:
            raise ProblemParseError(f"{path}:{cursor + 1}: expected '<name> <length>'")
        name = tokens[0]
        try:
            length = int(tokens[1])
            values_line = raw[cursor + 1] if cursor + 1 < len(raw) else ""
            values = np.array([float(token) for token in values_line.split()], dtype=float)
        except ValueError as exc:
            raise ProblemParseError(f"{path}:{cursor + 2}: malformed values of {name}") from exc
        if values.shape[0] != length:
            raise DimensionMismatchError(
                f"{path}: block {name} declares {length} entries, found {values.shape[0]}"
            )
        blocks[name] = values
        cursor += 2
    return blocks


def save_state(state: AdmmState, path: PathLike) -> None:
    """Write an ADMM state for a later warm start."""
    save_blocks(state.to_blocks(), path)
    logger.info("state_saved", path=str(path), p=state.p, iter=state.iter)


def load_state(path: PathLike) -> AdmmState:
    state = AdmmState.from_blocks(load_blocks(path))
    logger.info("state_loaded", path=str(path), p=state.p, iter=state.iter)
    return state
