"""CSV files of benchmark records.

Columns, in order::

    p, solver, seed, status, time_ms, iters, residual, obj_1 .. obj_<P>,
    refactors, t_kkt, t_rhs, t_solve, t_lambda, t_proj, t_dual, message

``P`` is the largest level count among the records; rows of smaller
hierarchies leave the trailing objective cells empty. Reals are written
with 17 significant digits.
"""

import csv
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from ..core.bench import PHASE_COLUMNS
from ..errors import DimensionMismatchError, ProblemIOError, ProblemParseError
from ..logging_config import get_logger
from ..models.bench import BenchRecord
from .problem_io import format_decimal

logger = get_logger("tools.report_io")

PathLike = Union[str, Path]
LEADING_COLUMNS = ("p", "solver", "seed", "status", "time_ms", "iters", "residual")
TRAILING_COLUMNS = ("refactors",) + PHASE_COLUMNS + ("message",)
REAL_COLUMNS = frozenset({"time_ms", "residual"} | set(PHASE_COLUMNS))


def csv_columns(max_levels: int) -> List[str]:
    return [*LEADING_COLUMNS, *(f"obj_{l}" for l in range(1, max_levels + 1)), *TRAILING_COLUMNS]


def _row(record: BenchRecord, max_levels: int) -> dict:
    row = {}
    for name in LEADING_COLUMNS + TRAILING_COLUMNS:
        value = getattr(record, name)
        if value is None:
            row[name] = ""
        elif name in REAL_COLUMNS:
            row[name] = format_decimal(value)
        else:
            row[name] = value
    for level in range(1, max_levels + 1):
        objectives = record.objectives
        row[f"obj_{level}"] = format_decimal(objectives[level - 1]) if level <= len(objectives) else ""
    return row


def emit_csv(records: Iterable[BenchRecord], path: PathLike, max_levels: Optional[int] = None) -> Path:
    """Write ``records`` to ``path`` (header only for an empty list).

    Raises:
        ProblemIOError: If the file cannot be written.
    """
    records = list(records)
    if max_levels is None:
        max_levels = max((len(record.objectives) for record in records), default=0)
    path = Path(path)
    try:
        if path.parent != Path(""):
            path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.DictWriter(handle, fieldnames=csv_columns(max_levels))
            writer.writeheader()
            for record in records:
                writer.writerow(_row(record, max_levels))
    except OSError as exc:
        raise ProblemIOError(f"cannot write {path}: {exc}") from exc
    logger.info("csv_written", path=str(path), records=len(records), max_levels=max_levels)
    return path


def read_csv(path: PathLike) -> List[BenchRecord]:
    """Parse a file written by :func:`emit_csv`.

    Raises:
        ProblemIOError: If the file cannot be read.
        ProblemParseError: If a row does not describe a valid record.
    """
    try:
        with Path(path).open(newline="", encoding="utf-8") as handle:
            rows = list(csv.DictReader(handle))
    except OSError as exc:
        raise ProblemIOError(f"cannot read {path}: {exc}") from exc

    records = []
    for line, row in enumerate(rows, start=2):
        objective_columns = sorted(
            (name for name in row if name and name.startswith("obj_")),
            key=lambda name: int(name[4:]),
        )
        values = {name: row[name] for name in LEADING_COLUMNS + TRAILING_COLUMNS if row.get(name, "") != ""}
        try:
            values["objectives"] = [float(row[name]) for name in objective_columns if row[name] != ""]
            records.append(BenchRecord(**values))
        except (ValidationError, ValueError) as exc:
            raise ProblemParseError(f"{path}:{line}: invalid record: {exc}") from exc
    return records


def emit_jacobian_csv(jacobian: np.ndarray, level_sizes: Sequence[int], path: PathLike) -> Path:
    """Write ``dx/db`` with one row per variable and one column ``b_<level>_<row>`` per entry of ``b``.

    Raises:
        ProblemIOError: If the file cannot be written.
    """
    header = ["x"] + [f"b_{level}_{row}" for level, m in enumerate(level_sizes, start=1) for row in range(1, m + 1)]
    if jacobian.shape[1] != len(header) - 1:
        raise DimensionMismatchError(
            f"jacobian has {jacobian.shape[1]} columns, levels have {len(header) - 1} rows"
        )
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for index, row in enumerate(jacobian, start=1):
                writer.writerow([index, *(format_decimal(value) for value in row)])
    except OSError as exc:
        raise ProblemIOError(f"cannot write {path}: {exc}") from exc
    logger.info("jacobian_csv_written", path=str(path), rows=int(jacobian.shape[0]), columns=int(jacobian.shape[1]))
    return path
