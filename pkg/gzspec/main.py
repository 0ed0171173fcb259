import argparse
import sys
from typing import Sequence

import structlog

from gzspec.commands import analyze, inverse, truncate, verify
from gzspec.config import settings
from gzspec.core.exceptions import GzSpecError, SpecParseError
from gzspec.core.monitoring import setup_monitoring

logger = structlog.get_logger()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.PROJECT_NAME,
        description="Spectral-set calculus for Drazin and g_z-inverses",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (analyze, inverse, verify, truncate):
        command.register(subparsers)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    setup_monitoring()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except GzSpecError as exc:
        logger.error("Command failed", command=args.command, error=type(exc).__name__)
        print(f"{settings.PROJECT_NAME}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        # bad flag values that only surface once the pipeline runs
        print(f"{settings.PROJECT_NAME}: error: {exc}", file=sys.stderr)
        return SpecParseError.exit_code


if __name__ == "__main__":
    sys.exit(main())
