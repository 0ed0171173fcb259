import argparse
from typing import Any

import structlog

from gzspec import codec
from gzspec import gz_calculus as gz
from gzspec import operator_models as om
from gzspec.commands import add_common_arguments, tolerance_echo, tolerances_from, write_report
from gzspec.config import ToleranceConfig, settings
from gzspec.core.exceptions import (
    MalformedSelectionError,
    ResidualExceededError,
    UnsupportedSpectralShapeError,
)
from gzspec.schemas import CertificateSummary, ContourDocument, SelectionDocument, SpectralReport
from gzspec.spectral_sets import ExactComplex

logger = structlog.get_logger()


def register(subparsers) -> None:
    parser = subparsers.add_parser("inverse", help="g_z-inverse for a spectral set")
    add_common_arguments(parser)
    parser.add_argument("--spectral-set", required=True, dest="spectral_set", help="selection JSON file")
    parser.add_argument("--r", help="shift scalar in (T + rP)^-1 (I - P)")
    parser.add_argument("--contour", help="contour JSON file enclosing the complement of the selection")
    parser.set_defaults(handler=run)


def _matrix_certificate(A, args: argparse.Namespace, cfg: ToleranceConfig) -> CertificateSummary:
    doc = codec.load_document(args.spectral_set, SelectionDocument)
    if doc.selected_clusters or doc.boundary_moves:
        raise MalformedSelectionError("matrix selections list eigenvalues only")
    sigma = [complex(ExactComplex.parse(p)) for p in doc.selected_points]
    r = complex(codec.parse_point(args.r)) if args.r else None
    contour = None
    if args.contour:
        contour = codec.contour_from_document(codec.load_document(args.contour, ContourDocument))
    cert = gz.gz_inverse_for_set(A, sigma, r=r, cfg=cfg, contour=contour)
    return CertificateSummary(
        kind=cert.kind,
        commutation_residual=cert.commutation_residual,
        inner_residual=cert.inner_residual,
        power_residual=cert.power_residual,
        core_residual=cert.core_residual,
        claimed_index=cert.claimed_index,
        passed=cert.passed,
        checks=cert.checks,
        inverse=codec.matrix_to_document(cert.inverse),
    )


def _diagonal_certificate(m: om.Diagonal, args: argparse.Namespace) -> CertificateSummary:
    sigma = codec.load_selection(args.spectral_set)
    inverse, cert = om.gz_inverse_diagonal(m, sigma)
    return CertificateSummary(
        kind="gz_diagonal",
        passed=cert.passed,
        checks=cert.checks,
        inverse_model=codec.operator_to_data(inverse),
        inverse_spectrum=codec.spectrum_to_document(om.spectrum(inverse)),
        sampled_entries=cert.sampled,
        sample_bound=cert.sample_bound,
    )


def _finite_matrix(m: Any):
    if isinstance(m, om.FiniteMatrix):
        return m.matrix
    if om.is_finite_model(m):
        return om.truncate(m, om.full_size(m))
    raise UnsupportedSpectralShapeError(f"no g_z-inverse construction for {m.variant} models")


def run(args: argparse.Namespace) -> int:
    """
    Build the inverse, certify it and report; exit 5 when a residual check fails.
    """
    cfg = tolerances_from(args)
    operator_id, model = codec.load_operator(args.operator)
    if isinstance(model, om.Diagonal):
        summary = _diagonal_certificate(model, args)
    else:
        summary = _matrix_certificate(_finite_matrix(model), args, cfg)

    report = SpectralReport(
        command="inverse",
        operator_id=operator_id,
        certificates=[summary],
        checks=summary.checks,
        passed=summary.passed,
        tool_version=settings.VERSION,
        tolerances=tolerance_echo(cfg),
    )
    write_report(report, args.out)
    if not summary.passed:
        failed = [c.name for c in summary.checks if not c.passed]
        logger.warning("Inverse certificate failed", operator=operator_id, failed=failed)
        return ResidualExceededError.exit_code
    return 0
