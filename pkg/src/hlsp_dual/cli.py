"""Command-line entry point: ``generate``, ``solve``, ``bench`` and ``gradient``.

Exit codes: 0 on success, 1 when a command fails at run time, 2 on
invalid usage.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import settings
from .core import dhadm
from .core.bench import phase_shares, run_solver, run_suite, summarize_records
from .core.gradient import jacobian_x_wrt_b
from .core.problem import generate_random_hierarchy
from .errors import HlspError, UsageError
from .logging_config import get_logger
from .models.bench import ExperimentConfig
from .models.config import AdmmConfig, IpmConfig
from .tools.problem_io import load_problem, load_state, save_problem, save_state
from .tools.report_io import emit_csv, emit_jacobian_csv

logger = get_logger("cli")

SOLVER_CHOICES = ("dhadm", "dhipm", "baseline")
EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hlsp", description="Dual hierarchical least-squares toolkit.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    generate = commands.add_parser("generate", help="Write a random hierarchy to a problem file.")
    generate.add_argument("--p", type=int, required=True, help="Number of levels.")
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--full-rank", action="store_true", help="Skip the dependent-row substitution.")
    generate.add_argument("--feasible", action="store_true", help="Make every level feasible.")
    generate.add_argument("--out", required=True, help="Problem file to write.")

    solve = commands.add_parser("solve", help="Solve one problem file and print the report as JSON.")
    solve.add_argument("--problem", required=True)
    solve.add_argument("--solver", choices=SOLVER_CHOICES, default="dhadm")
    solve.add_argument("--chi", type=float, default=None, help="Convergence threshold override.")
    solve.add_argument("--max-iters", type=int, default=None)
    solve.add_argument("--projection", choices=("cubic", "ipm"), default=None, help="ADMM projection path.")
    solve.add_argument("--warm-start", default=None, help="ADMM state file to start from.")
    solve.add_argument("--save-state", default=None, help="Write the final ADMM state here.")

    bench = commands.add_parser("bench", help="Run a benchmark suite and write CSV records.")
    bench.add_argument("--p-min", type=int, default=1)
    bench.add_argument("--p-max", type=int, default=10)
    bench.add_argument("--reps", type=int, default=100)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--solvers", nargs="+", choices=SOLVER_CHOICES, default=list(SOLVER_CHOICES))
    bench.add_argument("--full-rank", action="store_true")
    bench.add_argument("--admm-chi", type=float, default=None)
    bench.add_argument("--admm-max-iters", type=int, default=None)
    bench.add_argument("--ipm-chi", type=float, default=None)
    bench.add_argument("--threads", type=int, default=None, help=f"Defaults to HLSP_THREADS ({settings.threads}).")
    bench.add_argument("--out", default=None, help="CSV path (default: <output_dir>/bench.csv).")
    bench.add_argument("--summary", action="store_true", help="Print per (p, solver) medians.")

    gradient = commands.add_parser("gradient", help="Write the Jacobian dx/db as CSV.")
    gradient.add_argument("--problem", required=True)
    gradient.add_argument(
        "--source",
        choices=("baseline", "dhipm"),
        default="baseline",
        help=(
            "Point the Jacobian is taken at. baseline (default) is the exact sequential solution, "
            "so the result does not depend on a solver tolerance; dhipm uses the converged "
            "interior-point iterate."
        ),
    )
    gradient.add_argument("--out", required=True)
    return parser


# ============================================================================
# Commands
# ============================================================================


def _cmd_generate(args: argparse.Namespace) -> int:
    problem = generate_random_hierarchy(args.p, args.seed, full_rank=args.full_rank, feasible=args.feasible)
    save_problem(problem, args.out)
    print(f"wrote p={problem.p} n_x={problem.n_x} rows={problem.total_rows} to {args.out}")
    return EXIT_OK


def _cmd_solve(args: argparse.Namespace) -> int:
    problem = load_problem(args.problem)
    if args.solver != "dhadm" and (args.warm_start or args.save_state or args.projection):
        raise UsageError("--warm-start, --save-state and --projection apply to the dhadm solver only")

    overrides = {}
    if args.chi is not None:
        overrides["chi"] = args.chi
    if args.max_iters is not None:
        overrides["max_iters"] = args.max_iters

    if args.solver == "dhadm":
        if args.projection is not None:
            overrides["projection"] = args.projection
        config = AdmmConfig.from_settings(**overrides)
        warm_start = load_state(args.warm_start) if args.warm_start else None
        report, state = dhadm.run_admm(problem, config, warm_start)
        if args.save_state:
            save_state(state, args.save_state)
    else:
        ipm_config = IpmConfig.from_settings(**overrides) if args.solver == "dhipm" else None
        report = run_solver(problem, args.solver, ipm_config=ipm_config)

    print(report.model_dump_json(indent=2, by_alias=True))
    return EXIT_OK if report.status != "failed" else EXIT_RUNTIME


def _cmd_bench(args: argparse.Namespace) -> int:
    config = ExperimentConfig(
        p_min=args.p_min,
        p_max=args.p_max,
        reps=args.reps,
        seed=args.seed,
        solvers=args.solvers,
        full_rank=args.full_rank,
        admm_chi=args.admm_chi,
        admm_max_iters=args.admm_max_iters,
        ipm_chi=args.ipm_chi,
        threads=args.threads,
    )
    records = run_suite(config)
    out = Path(args.out) if args.out else Path(settings.output_dir) / "bench.csv"
    emit_csv(records, out, max_levels=config.p_max)
    print(f"wrote {len(records)} records to {out}")

    if args.summary:
        print("p  solver    runs  failed  median_ms     median_iters  median_residual  max_obj_gap")
        for row in summarize_records(records):
            gap = "-" if row.max_objective_gap is None else f"{row.max_objective_gap:.3e}"
            print(
                f"{row.p:<2} {row.solver:<9} {row.runs:<5} {row.failures:<7} "
                f"{row.median_time_ms:<13.4f} {row.median_iters:<13.1f} {row.median_residual:<16.3e} {gap}"
            )
        admm_rows = [record for record in records if record.solver == "dhadm" and record.status != "failed"]
        if admm_rows:
            shares = [phase_shares(record) for record in admm_rows]
            mean = {name: sum(share[name] for share in shares) / len(shares) for name in shares[0]}
            print("dhadm phase shares (%): " + ", ".join(f"{name}={value:.1f}" for name, value in mean.items()))
    return EXIT_OK


def _cmd_gradient(args: argparse.Namespace) -> int:
    problem = load_problem(args.problem)
    jacobian = jacobian_x_wrt_b(problem, source=args.source)
    emit_jacobian_csv(jacobian, problem.level_sizes, args.out)
    print(f"wrote {jacobian.shape[0]}x{jacobian.shape[1]} jacobian to {args.out}")
    return EXIT_OK


COMMANDS = {
    "generate": _cmd_generate,
    "solve": _cmd_solve,
    "bench": _cmd_bench,
    "gradient": _cmd_gradient,
}


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help
        return int(exc.code or 0)

    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HlspError, ValueError) as exc:
        logger.error("command_failed", command=args.command, error=str(exc), error_type=type(exc).__name__)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
