"""Subcommands. Each module exposes ``register(subparsers)`` and ``run(args) -> int``."""

import argparse
import json
import sys
from pathlib import Path

import structlog

from gzspec.config import ToleranceConfig, settings
from gzspec.schemas import SpectralReport, ToleranceEcho

logger = structlog.get_logger()


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("operator", help="operator spec JSON file")
    parser.add_argument("--out", help="write the report here instead of standard output")
    parser.add_argument("--tol-rank", type=float, dest="tol_rank", help="relative singular-value cutoff")
    parser.add_argument("--tol-residual", type=float, dest="tol_residual", help="residual tolerance")


def tolerances_from(args: argparse.Namespace) -> ToleranceConfig:
    return settings.tolerances(rank_rtol=args.tol_rank, residual_tol=args.tol_residual)


def tolerance_echo(cfg: ToleranceConfig) -> ToleranceEcho:
    return ToleranceEcho(profile=settings.GZSPEC_TOL_PROFILE, **cfg.model_dump())


def render(report: SpectralReport) -> str:
    payload = report.model_dump(mode="json", by_alias=True)
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_report(report: SpectralReport, out: str | None) -> None:
    text = render(report)
    if out:
        Path(out).write_text(text)
        logger.info("Report written", path=out, command=report.command)
    else:
        sys.stdout.write(text)
