import argparse

import structlog

from gzspec import codec
from gzspec.commands import add_common_arguments, tolerance_echo, tolerances_from, write_report
from gzspec.config import settings
from gzspec.core.exceptions import ResidualExceededError
from gzspec.schemas import SpectralReport
from gzspec.suites import SUITE_NAMES, SuiteContext, run_suites

logger = structlog.get_logger()


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify", help="run a property suite against an operator")
    add_common_arguments(parser)
    parser.add_argument("--suite", default="all", choices=SUITE_NAMES)
    parser.add_argument("--samples", type=int, default=settings.VERIFY_SAMPLES, help="punctured-neighbourhood samples")
    parser.add_argument("--size", type=int, default=settings.VERIFY_TRUNCATION, help="truncation size")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    """
    Run the suite(s); exit 0 iff every check passes.
    """
    cfg = tolerances_from(args)
    operator_id, model = codec.load_operator(args.operator)
    ctx = SuiteContext(model=model, cfg=cfg, samples=max(1, args.samples), size=max(1, args.size))
    outcomes = run_suites(args.suite, ctx)

    checks = sorted((c for o in outcomes for c in o.checks), key=lambda c: c.name)
    passed = all(c.passed for c in checks)
    report = SpectralReport(
        command="verify",
        operator_id=operator_id,
        checks=checks,
        suites=sorted(o.name for o in outcomes if not o.skipped),
        skipped=sorted(o.name for o in outcomes if o.skipped),
        passed=passed,
        tool_version=settings.VERSION,
        tolerances=tolerance_echo(cfg),
    )
    write_report(report, args.out)
    logger.info("Verification finished", operator=operator_id, checks=len(checks), passed=passed)
    return 0 if passed else ResidualExceededError.exit_code
