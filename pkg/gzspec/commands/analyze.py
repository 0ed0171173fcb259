import argparse
import math

import structlog

from gzspec import codec
from gzspec import operator_models as om
from gzspec import spectral_sets as ss
from gzspec.commands import add_common_arguments, tolerance_echo, tolerances_from, write_report
from gzspec.config import settings
from gzspec.core.exceptions import NotSemiFredholmError
from gzspec.schemas import LatticeTagResponse, PointDataResponse, SpectralReport, SpectralTiers

logger = structlog.get_logger()


def register(subparsers) -> None:
    parser = subparsers.add_parser("analyze", help="classify an operator model at a point")
    add_common_arguments(parser)
    parser.add_argument("--point", default="0", help="query point, e.g. 0, 1/2 or 0.5+0i")
    parser.set_defaults(handler=run)


def spectral_tiers(S: ss.SpectrumModel, point: ss.ExactComplex) -> SpectralTiers:
    """
    Membership of the point in S, acc S and acc acc S.
    """
    if any(d.contains(point) for d in S.disks):
        # only disk centres get this far; acc of a disk is the whole disk
        return SpectralTiers(in_spectrum=True, in_acc=True, in_acc_acc=True)
    countable = ss.SpectrumModel(points=S.points, clusters=S.clusters)
    return SpectralTiers(
        in_spectrum=countable.contains(point),
        in_acc=ss.acc(countable).contains(point),
        in_acc_acc=point in ss.acc_acc(countable),
    )


def _index_text(m, point, cfg) -> str | None:
    try:
        value = om.index(m, point, cfg)
    except NotSemiFredholmError:
        return None
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return str(value)


def run(args: argparse.Namespace) -> int:
    """
    Classification, spectral tiers and kernel data at one point.
    """
    cfg = tolerances_from(args)
    operator_id, model = codec.load_operator(args.operator)
    point = codec.parse_point(args.point)

    tag = om.classify(model, point, cfg)
    data = om.point_data(model, point, cfg)
    tiers = spectral_tiers(om.spectrum(model, cfg), point)
    logger.info("Point classified", operator=operator_id, point=str(point), tier=tag.tier.value)

    report = SpectralReport(
        command="analyze",
        operator_id=operator_id,
        point=point.to_json(),
        classification=LatticeTagResponse(
            tier=tag.tier.value, browder=tag.browder, left_gz=tag.left_gz, right_gz=tag.right_gz
        ),
        spectral_tiers=tiers,
        point_data=PointDataResponse(
            alpha=data.alpha,
            beta=data.beta,
            isolated=data.isolated,
            in_spectrum=data.in_spectrum,
            index=_index_text(model, point, cfg),
        ),
        tool_version=settings.VERSION,
        tolerances=tolerance_echo(cfg),
    )
    write_report(report, args.out)
    return 0
