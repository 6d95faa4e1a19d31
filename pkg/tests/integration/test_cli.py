import csv
import json

from src.hlsp_dual.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, cli_main
from src.hlsp_dual.tools.problem_io import load_problem
from src.hlsp_dual.tools.report_io import read_csv


def _generate(tmp_path, *extra) -> str:
    path = tmp_path / "problem.txt"
    assert cli_main(["generate", "--p", "3", "--seed", "4", "--out", str(path), *extra]) == EXIT_OK
    return str(path)


def test_generate_writes_problem(tmp_path) -> None:
    path = _generate(tmp_path)
    problem = load_problem(path)
    assert problem.p == 3
    assert problem.level_sizes == [1, 2, 3]


def test_solve_with_baseline_prints_report(tmp_path, capsys) -> None:
    path = _generate(tmp_path)
    capsys.readouterr()
    assert cli_main(["solve", "--problem", path, "--solver", "baseline"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["solver"] == "baseline"
    assert report["status"] == "converged"
    assert "lambda" in report["solution"]
    assert len(report["solution"]["per_level_objective"]) == 3


def test_admm_state_can_be_saved_and_reused(tmp_path, capsys) -> None:
    path = _generate(tmp_path)
    state = tmp_path / "state.txt"
    argv = ["solve", "--problem", path, "--solver", "dhadm", "--max-iters", "5", "--chi", "1e-14"]
    assert cli_main([*argv, "--save-state", str(state)]) == EXIT_OK
    assert state.exists()
    capsys.readouterr()
    assert cli_main([*argv, "--warm-start", str(state)]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["status"] == "max_iters"
    assert report["iterations"] == 5


def test_unknown_solver_is_a_usage_error(tmp_path) -> None:
    path = _generate(tmp_path)
    assert cli_main(["solve", "--problem", path, "--solver", "simplex"]) == EXIT_USAGE


def test_admm_only_flags_are_rejected_for_other_solvers(tmp_path) -> None:
    path = _generate(tmp_path)
    assert cli_main(["solve", "--problem", path, "--solver", "baseline", "--projection", "ipm"]) == EXIT_USAGE


def test_missing_problem_file_is_a_runtime_error(tmp_path) -> None:
    assert cli_main(["solve", "--problem", str(tmp_path / "absent.txt"), "--solver", "baseline"]) == EXIT_RUNTIME


def test_missing_command_is_a_usage_error() -> None:
    assert cli_main([]) == EXIT_USAGE


def test_help_exits_cleanly(capsys) -> None:
    assert cli_main(["--help"]) == EXIT_OK
    assert "generate" in capsys.readouterr().out


def test_gradient_help_explains_default_source(capsys) -> None:
    assert cli_main(["gradient", "--help"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "exact" in out
    assert "tolerance" in out


def test_bench_writes_one_row_per_cell(tmp_path, capsys) -> None:
    out = tmp_path / "bench.csv"
    argv = [
        "bench", "--p-min", "1", "--p-max", "2", "--reps", "2",
        "--solvers", "baseline", "--threads", "1", "--out", str(out), "--summary",
    ]
    assert cli_main(argv) == EXIT_OK
    records = read_csv(out)
    assert len(records) == 4
    assert {record.p for record in records} == {1, 2}
    assert "median_ms" in capsys.readouterr().out


def test_gradient_writes_jacobian(tmp_path) -> None:
    path = _generate(tmp_path, "--full-rank")
    out = tmp_path / "jacobian.csv"
    assert cli_main(["gradient", "--problem", path, "--out", str(out)]) == EXIT_OK
    with out.open(newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    assert rows[0][0] == "x"
    assert len(rows[0]) == 1 + 6
    assert len(rows) == 1 + 3
