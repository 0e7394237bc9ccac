"""
Command-line entry point: otc-steady {integrate,steady,simulate,verify} --config FILE.

Exit status is 0 on success (a heterogeneous market without a steady state
included), 1 on a numerical failure or a failed verification check and 2 on
an invalid configuration.
"""

import argparse
import logging
import sys
from typing import List, Optional

from src.cli.commands import COMMANDS
from src.cli.config import ConfigError, apply_overrides, load_config
from src.markets.params import ParameterError
from src.ode.integrator import IntegrationError
from src.simulation.particles import SimulationError
from src.steady.results import SolverError
from src.subdivision.engine import SubdivisionError
from src.utils.logging_config import level_from_flags, setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='otc-steady',
        description='Steady states, mean-field dynamics and particle simulation of OTC markets'
    )
    parser.add_argument(
        'command',
        choices=sorted(COMMANDS),
        help='What to run'
    )
    parser.add_argument(
        '--config', '-c',
        required=True,
        help='Path to the JSON run configuration'
    )
    parser.add_argument(
        '--out',
        help='Output prefix (overrides output.prefix)'
    )
    parser.add_argument(
        '--seed',
        type=int,
        help='Seed for the simulation and the restart search'
    )
    parser.add_argument(
        '--tol',
        type=float,
        help='Solver and verification tolerance'
    )
    parser.add_argument(
        '--eps',
        type=float,
        help='Volume at which box subdivision stops'
    )
    parser.add_argument(
        '--grid',
        type=int,
        help='Face sampling points per axis'
    )
    parser.add_argument(
        '--log-file',
        help='Also write the log to this file'
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument(
        '--verbose', '-v',
        action='store_true',
        help='Enable debug logging'
    )
    verbosity.add_argument(
        '--quiet', '-q',
        action='store_true',
        help='Only log warnings and errors'
    )
    return parser


def _print_summary(summary: dict) -> None:
    print("\n" + "=" * 50)
    print(f"{summary['command'].upper()} SUMMARY")
    print("=" * 50)
    for key, value in summary.items():
        if key in ('command', 'files'):
            continue
        print(f"{key}: {value}")
    for path in summary.get('files', []):
        print(f"  -> {path}")


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run one subcommand and return the exit status.

    Args:
        argv: Argument list (defaults to sys.argv[1:])

    Returns:
        0, 1 or 2 as described in the module docstring
    """
    args = build_parser().parse_args(argv)
    level = level_from_flags(args.verbose, args.quiet)
    setup_logging(level=level, log_file=args.log_file)

    try:
        config = load_config(args.config)
        config = apply_overrides(config, seed=args.seed, tol=args.tol, eps=args.eps,
                                 grid=args.grid, out=args.out)
    except (ConfigError, ParameterError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_INVALID

    logger.info(f"Running {args.command} for a {config.model_class.value} market")
    try:
        summary = COMMANDS[args.command](config)
    except (ConfigError, ParameterError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_INVALID
    except (IntegrationError, SimulationError, SolverError, SubdivisionError) as e:
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        return EXIT_FAILURE

    if not args.quiet:
        _print_summary(summary)
    if summary.get('passed') is False:
        logger.error(f"Verification failed: {summary.get('failed')}")
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
