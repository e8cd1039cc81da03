#!/usr/bin/env python3
"""
Anyon Braid Simulator - Main Entry Point

Runs one simulation described by a JSON run config and writes result.json
(plus any CSV series) to the output directory.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error, 1 anything unexpected.
"""

import argparse
import logging
import os
import sys

from cli.config import DEFAULT_OUTPUT, load_run_config
from cli.runner import run
from cli.utils import ensure_directory_exists
from core.errors import BraidSimError, ConfigError, NumericalError

LOG_FILE = 'anyon_braid.log'


def setup_logging(output_dir=None, quiet=False, verbose=False):
    """Configure logging for the application."""
    console = logging.StreamHandler()
    console.setLevel(logging.WARNING if quiet else logging.DEBUG)
    handlers = [console]
    if output_dir is not None:
        handlers.insert(0, logging.FileHandler(os.path.join(output_dir, LOG_FILE)))

    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def parse_args(argv=None):
    parser = argparse.ArgumentParser(
        prog='anyon-braid',
        description='Adiabatic braiding of non-Abelian anyons in a T-junction',
    )
    parser.add_argument('--config', required=True, help='path to a JSON run config')
    parser.add_argument('--output', default=None,
                        help=f'output directory (default: config "output" or {DEFAULT_OUTPUT})')
    parser.add_argument('--quiet', action='store_true', help='only print warnings and the summary')
    parser.add_argument('--verbose', action='store_true', help='debug logging')
    return parser.parse_args(argv)


def main(argv=None):
    """Main application entry point."""
    args = parse_args(argv)

    try:
        config = load_run_config(args.config)
    except ConfigError as e:
        setup_logging(quiet=args.quiet)
        logging.getLogger(__name__).error(f"Invalid config: {e}")
        print(f"Error: config error - {e}", file=sys.stderr)
        return ConfigError.exit_code
    except OSError as e:
        setup_logging(quiet=args.quiet)
        logging.getLogger(__name__).error(f"Cannot read config: {e}")
        print(f"Error: I/O error - {e}", file=sys.stderr)
        return 4

    output_dir = args.output or config.output or DEFAULT_OUTPUT
    verbose = args.verbose or bool(config.settings.get('verbose_logging', False))
    try:
        ensure_directory_exists(output_dir)
    except OSError as e:
        print(f"Error: I/O error - {e}", file=sys.stderr)
        return 4
    setup_logging(output_dir, args.quiet, verbose)
    logger = logging.getLogger(__name__)

    try:
        result = run(config, output_dir)
        print(result.summary)
        return 0

    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        print(f"Error: config error - {e}", file=sys.stderr)
        return e.exit_code
    except NumericalError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"Error: {type(e).__name__} - {e}", file=sys.stderr)
        return e.exit_code
    except BraidSimError as e:
        logger.error(f"Simulation failed: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O error: {e}")
        print(f"Error: I/O error - {e}", file=sys.stderr)
        return 4
    except Exception as e:
        logger.error(f"Run failed unexpectedly: {e}")
        print(f"Error: run failed - {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
