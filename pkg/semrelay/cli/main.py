"""
Command-line entry point for the semantic relay optimizer.

Usage:
    semrelay solve --config config/tiny.json --out results/tiny
    semrelay sweep --config config/sweep_br.json --modes joint,fixed-b,fixed-p,fixed-l
    semrelay trajectory --config config/trajectory.json
    semrelay scenarios --config config/scenarios.json --placement
    semrelay oracle-check --config config/tiny.json

Exit codes: 0 success, 1 configuration or solver error, 2 iteration limit
reached, 3 oracle refusal, 4 oracle disagreement.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .. import __version__
from ..core.exceptions import ConfigurationError, OracleRefusalError, SemRelayError, SolverError
from ..core.models import BaselineMode, RunConfig
from ..core.netmodel import build_arrays
from ..oracle.grid import check_size, feasible, grid_search
from ..scenarios.experiments import (
    SweepRow,
    compare_scenarios,
    placement_study,
    run_modes,
    sweep,
    trajectory_sweep,
)
from ..scenarios.generator import instance_from_config
from ..solver.ao import alternating_optimize
from ..utils.env_loader import get_default_seed, load_environment_variables
from ..utils.logging import StructuredLogger, configure_default_logging, setup_logging
from .io import (
    apply_overrides,
    parse_modes,
    read_run_config,
    write_allocation,
    write_json,
    write_series,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MAX_ITERS = 2
EXIT_REFUSAL = 3
EXIT_DISAGREEMENT = 4

AGREEMENT_REL = 0.02
ORACLE_FEASIBILITY_TOL = 1e-9

logger = StructuredLogger(__name__)


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser with one subcommand per experiment family."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, required=True, help="Path to a JSON run configuration")
    common.add_argument("--out", type=str, help="Output directory (overrides output.directory)")
    common.add_argument("--seed", type=int,
                        help="Seed for instance generation and the solver (default from SEMRELAY_SEED)")
    common.add_argument("--modes", type=str, help="Comma-separated modes: joint,fixed-b,fixed-p,fixed-l")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"), help="Series file format")
    common.add_argument("--log-level", type=str, help="Logging level (default from SEMRELAY_LOG_LEVEL)")

    parser = argparse.ArgumentParser(
        prog="semrelay",
        description="Sum-rate optimization for satellite-UAV-ground semantic relay networks",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s solve --config config/tiny.json --out results/tiny
  %(prog)s sweep --config config/sweep_br.json --modes joint,fixed-b
  %(prog)s oracle-check --config config/tiny.json
        """,
    )
    parser.add_argument("--version", action="version", version=f"semrelay v{__version__}")
    subparsers = parser.add_subparsers(dest="command", help="Available commands", metavar="COMMAND")

    subparsers.add_parser("solve", parents=[common], help="Solve one instance",
                          description="Solve the configured instance and write report.json and allocation.csv")
    subparsers.add_parser("sweep", parents=[common], help="Sweep a budget or population axis",
                          description="Solve along sweep.axis and write series.csv")
    subparsers.add_parser("trajectory", parents=[common], help="Satellite trajectory sweep",
                          description="Solve along the satellite ground track and write series.csv")
    scenarios_parser = subparsers.add_parser("scenarios", parents=[common], help="Compare user mixes",
                                             description="Solve every user mix and write series.csv")
    scenarios_parser.add_argument("--placement", action="store_true",
                                  help="Also write placement.csv (UAV position against user centroid)")
    subparsers.add_parser("oracle-check", parents=[common], help="Cross-check the solver against the oracle",
                          description="Run the solver and the grid oracle on a tiny instance")
    return parser


def _series_rows(rows: Sequence[SweepRow], config: RunConfig) -> List[Dict[str, Any]]:
    out = [row.to_dict() for row in rows]
    if not config.output.timings:
        for row in out:
            row["wall_ms"] = 0.0
    return out


def cmd_solve(config: RunConfig) -> int:
    instance = instance_from_config(config)
    arrays = build_arrays(instance)
    reports = run_modes(instance, config.modes, config.solver)
    primary = reports[config.modes[0]]
    data = primary.to_dict(instance, arrays)
    if not config.output.timings:
        data["wall_ms"] = 0.0
    data["baselines"] = {
        mode.value: {"objective_bps": r.objective, "status": r.status, "max_residual": r.max_residual}
        for mode, r in reports.items()
    }
    out_dir = Path(config.output.directory)
    write_json(data, out_dir / "report.json")
    write_allocation(primary.allocation, arrays, out_dir)

    for mode, report in reports.items():
        print(f"{mode.value:<8} sum_rate={report.objective!r} bps status={report.status} "
              f"iters={report.outer_iterations} max_residual={report.max_residual!r}")
    if any(not r.converged for r in reports.values()):
        logger.warning("at least one solve stopped at the iteration limit")
        return EXIT_MAX_ITERS
    return EXIT_OK


def _write_rows(rows: Sequence[SweepRow], config: RunConfig) -> int:
    path = write_series(_series_rows(rows, config), config.output.directory, config.output.format)
    print(f"wrote {len(rows)} rows to {path}")
    if any(row.status != "converged" for row in rows):
        logger.warning("at least one sweep point stopped at the iteration limit")
        return EXIT_MAX_ITERS
    return EXIT_OK


def cmd_sweep(config: RunConfig) -> int:
    return _write_rows(sweep(config), config)


def cmd_trajectory(config: RunConfig) -> int:
    return _write_rows(trajectory_sweep(config), config)


def cmd_scenarios(config: RunConfig, placement: bool = False) -> int:
    code = _write_rows(compare_scenarios(config), config)
    if placement:
        rows = placement_study(config)
        fields = ("layout", "cluster", "centroid_x", "centroid_y", "uav_x", "uav_y",
                  "displacement_m", "sum_rate_bps")
        path = write_series(rows, config.output.directory, "csv", "placement", fields)
        print(f"wrote {len(rows)} rows to {path}")
    return code


def cmd_oracle_check(config: RunConfig) -> int:
    instance = instance_from_config(config)
    check_size(instance)
    report = alternating_optimize(instance, config.solver, BaselineMode.JOINT)
    oracle = grid_search(instance)
    ao_ok, _ = feasible(instance, report.allocation, ORACLE_FEASIBILITY_TOL)
    oracle_ok, _ = feasible(instance, oracle.allocation, ORACLE_FEASIBILITY_TOL)
    scale = max(abs(report.objective), abs(oracle.objective), 1.0)
    gap = abs(report.objective - oracle.objective) / scale

    print(f"solver sum_rate={report.objective!r} bps feasible={ao_ok}")
    print(f"oracle sum_rate={oracle.objective!r} bps feasible={oracle_ok}")
    print(f"relative gap={gap!r}")
    write_json({
        "solver_bps": report.objective,
        "oracle_bps": oracle.objective,
        "relative_gap": gap,
        "solver_feasible": ao_ok,
        "oracle_feasible": oracle_ok,
        "oracle_allocation": oracle.allocation.to_dict(),
    }, Path(config.output.directory) / "oracle_check.json")
    if ao_ok and oracle_ok and gap <= AGREEMENT_REL:
        return EXIT_OK
    logger.warning("solver and oracle disagree", gap=gap, solver_feasible=ao_ok,
                   oracle_feasible=oracle_ok)
    return EXIT_DISAGREEMENT


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    parser = create_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_OK

    load_environment_variables()
    if args.log_level:
        setup_logging(level=args.log_level.upper())
    else:
        configure_default_logging()

    try:
        config = read_run_config(args.config)
        seed = args.seed if args.seed is not None else get_default_seed()
        config = apply_overrides(config, seed=seed, modes=parse_modes(args.modes),
                                 out=args.out, fmt=args.fmt)
        if args.command == "solve":
            return cmd_solve(config)
        if args.command == "sweep":
            return cmd_sweep(config)
        if args.command == "trajectory":
            return cmd_trajectory(config)
        if args.command == "scenarios":
            return cmd_scenarios(config, placement=args.placement)
        if args.command == "oracle-check":
            return cmd_oracle_check(config)
        parser.print_help()
        return EXIT_CONFIG
    except ConfigurationError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OracleRefusalError as e:
        print(f"Oracle refused: {e}", file=sys.stderr)
        return EXIT_REFUSAL
    except SolverError as e:
        logger.error("solve failed", subproblem=e.subproblem, error=e.message)
        print(f"Solver error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SemRelayError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
