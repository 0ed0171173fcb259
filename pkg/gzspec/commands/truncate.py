import argparse

from gzspec import codec
from gzspec import operator_models as om
from gzspec.commands import add_common_arguments, tolerance_echo, tolerances_from, write_report
from gzspec.config import settings
from gzspec.schemas import SpectralReport


def register(subparsers) -> None:
    parser = subparsers.add_parser("truncate", help="leading N x N compression of an operator")
    add_common_arguments(parser)
    parser.add_argument("--size", type=int, default=settings.VERIFY_TRUNCATION, help="N")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    cfg = tolerances_from(args)
    operator_id, model = codec.load_operator(args.operator)
    block = om.truncate(model, args.size)
    report = SpectralReport(
        command="truncate",
        operator_id=operator_id,
        matrix=codec.matrix_to_document(block),
        tool_version=settings.VERSION,
        tolerances=tolerance_echo(cfg),
    )
    write_report(report, args.out)
    return 0
