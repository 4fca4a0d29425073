import argparse
import os
import sys
import traceback

from loguru import logger

# Add the project root to the path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.cli.commands import cmd_bench, cmd_generate, cmd_solve, cmd_warmstart
from app.utils.exceptions import (
    DimensionMismatchError,
    InvalidParametersError,
    NetworkValidationError,
    ScenarioFormatError,
    SchedulingError,
)
from app.utils.logger import setup_logging
from config.config import current_config
from config.constants import ExitCode, SolveStatus, Topology

INPUT_ERRORS = (
    ScenarioFormatError,
    NetworkValidationError,
    DimensionMismatchError,
    InvalidParametersError,
    ValueError,
)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _int_list(text):
    return [_positive_int(part) for part in text.split(",") if part.strip()]


def _float_list(text):
    return [float(part) for part in text.split(",") if part.strip()]


def _add_solve_flags(parser):
    group = parser.add_argument_group("solver settings")
    group.add_argument("--eps-abs", type=float, dest="eps_abs", help="Absolute tolerance (default 1e-3)")
    group.add_argument("--rho0", type=float, help="Initial penalty")
    group.add_argument("--lambda", type=float, dest="rho_lambda", help="Proportional gain of the rho update")
    group.add_argument("--mu", type=float, dest="rho_mu", help="Derivative gain of the rho update")
    group.add_argument("--max-iter", type=_positive_int, dest="max_iter", help="Iteration limit")
    group.add_argument("--threads", type=_positive_int, help="Device phase worker threads")
    group.add_argument(
        "--deterministic", action=argparse.BooleanOptionalAction, default=None,
        help="Fixed reduction order for residual norms",
    )


def _solve_overrides(args):
    keys = ["eps_abs", "rho0", "rho_lambda", "rho_mu", "max_iter", "threads", "deterministic"]
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opsp",
        description=f"{current_config.APP_TITLE} {current_config.APP_VERSION}",
    )
    parser.add_argument("--log-level", default=None, help="Log level (default from LOG_LEVEL)")
    parser.add_argument("--log-file", default=None, help="Also write a full debug log to this file")
    sub = parser.add_subparsers(dest="command", required=True)

    generate = sub.add_parser("generate", help="Generate a random benchmark scenario")
    generate.add_argument("--nets", "-N", type=int, required=True, dest="n_nets", help="Number of nets")
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--horizon", "-T", type=_positive_int, default=None)
    generate.add_argument("--topology", choices=Topology.ALL, default=None)
    generate.add_argument("--no-calibrate", action="store_true", help="Keep lossless placeholder lines")
    generate.add_argument("--out", "-o", required=True, help="Scenario file to write")

    solve = sub.add_parser("solve", help="Solve a scenario")
    solve.add_argument("scenario", help="Scenario file")
    solve.add_argument("--out", "-o", default="out", help="Output directory")
    solve.add_argument("--warm-start", default=None, help="solution.json to warm start from")
    _add_solve_flags(solve)

    bench = sub.add_parser("bench", help="Time the solver across network sizes")
    bench.add_argument("--sizes", type=_int_list, default=[30, 100, 300], help="Comma separated net counts")
    bench.add_argument("--seeds", type=_positive_int, default=3, help="Instances per size")
    bench.add_argument("--horizon", "-T", type=_positive_int, default=None)
    bench.add_argument("--out", "-o", default="bench", help="Output directory")
    _add_solve_flags(bench)

    warm = sub.add_parser("warmstart", help="Warm start after random load perturbations")
    warm.add_argument("scenario", help="Scenario file")
    warm.add_argument("--sigmas", type=_float_list, default=[0.0, 0.05, 0.1, 0.2])
    warm.add_argument("--seeds", type=_positive_int, default=10, help="Perturbations per sigma")
    warm.add_argument("--out", "-o", default="warmstart", help="Output directory")
    _add_solve_flags(warm)
    return parser


def run(args) -> int:
    """Dispatch a parsed command line; returns the process exit code."""
    if args.command == "generate":
        overrides = {}
        if args.horizon:
            overrides["horizon"] = args.horizon
        if args.topology:
            overrides["topology"] = args.topology
        if args.no_calibrate:
            overrides["calibrate"] = False
        cmd_generate(args.n_nets, args.seed, args.out, overrides)
        return ExitCode.CONVERGED

    if args.command == "solve":
        solution = cmd_solve(args.scenario, args.out, _solve_overrides(args), args.warm_start)
        if solution.status == SolveStatus.CONVERGED:
            return ExitCode.CONVERGED
        if solution.status == SolveStatus.MAX_ITER:
            return ExitCode.MAX_ITER
        return ExitCode.INTERNAL_FAILURE

    overrides = _solve_overrides(args)
    if args.command == "bench":
        threads = overrides.pop("threads", 1)
        cmd_bench(args.sizes, args.seeds, args.out, threads=threads, horizon=args.horizon, overrides=overrides)
    else:
        cmd_warmstart(args.scenario, args.sigmas, args.seeds, args.out, overrides)
    return ExitCode.CONVERGED


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return ExitCode.INPUT_ERROR if e.code else ExitCode.CONVERGED

    setup_logging(args.log_level, args.log_file)
    try:
        return run(args)
    except INPUT_ERRORS as e:
        logger.error(f"Input error: {str(e)}")
        logger.debug(traceback.format_exc())
        return ExitCode.INPUT_ERROR
    except SchedulingError as e:
        logger.error(f"Solver failure: {str(e)}")
        logger.debug(traceback.format_exc())
        return ExitCode.INTERNAL_FAILURE
    except Exception as e:
        logger.error(f"Unexpected error: {str(e)}")
        logger.debug(traceback.format_exc())
        return ExitCode.INTERNAL_FAILURE


if __name__ == "__main__":
    sys.exit(main())
