"""Named verification suites run by ``gzspec verify``."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Any, Callable

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict

from gzspec import gz_calculus as gz
from gzspec import linalg_kernel as lk
from gzspec import operator_models as om
from gzspec import spectral_sets as ss
from gzspec.config import ToleranceConfig, settings
from gzspec.core.exceptions import (
    DegenerateRestrictionError,
    GzSpecError,
    InvalidSpectralSetError,
    NotSemiFredholmError,
    SpecParseError,
    UnsupportedSpectralShapeError,
)
from gzspec.core.optimizations import worker_count
from gzspec.schemas import Check

logger = structlog.get_logger()

PERTURBATION_EDITS = 3
INDEX_POWERS = (2, 3)


class SuiteOutcome(BaseModel):
    name: str
    checks: list[Check] = []
    skipped: bool = False
    reason: str | None = None

    @classmethod
    def skip(cls, name: str, reason: str) -> "SuiteOutcome":
        logger.info("Suite skipped", suite=name, reason=reason)
        return cls(name=name, skipped=True, reason=reason)


class SuiteContext(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    model: Any
    cfg: ToleranceConfig
    samples: int = settings.VERIFY_SAMPLES
    size: int = settings.VERIFY_TRUNCATION


def _prefixed(suite: str, checks: list[Check], tag: str = "") -> list[Check]:
    head = f"{suite}.{tag}." if tag else f"{suite}."
    return [c.model_copy(update={"name": head + c.name}) for c in checks]


def _finite_matrix(m: Any) -> np.ndarray | None:
    if isinstance(m, om.FiniteMatrix):
        return m.matrix
    if om.is_finite_model(m):
        return om.truncate(m, om.full_size(m))
    return None


def _zero_selection(A: np.ndarray, cfg: ToleranceConfig) -> list[complex]:
    return [0j] if gz.eigenvalue_groups(A, cfg).zero is not None else []


def _zero_spectral_set(S: ss.SpectrumModel) -> ss.SpectralSetSelection:
    """Every atom whose closure meets 0."""
    clusters = [i for i, c in enumerate(S.clusters) if c.limit.is_zero() or c.is_accumulation(ss.ZERO)]
    points = [ss.ZERO] if ss.ZERO in S.points else []
    return ss.SpectralSetSelection(selected_points=points, selected_clusters=clusters)


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------


def drazin_suite(ctx: SuiteContext) -> SuiteOutcome:
    A = _finite_matrix(ctx.model)
    if A is None:
        return SuiteOutcome.skip("drazin", "needs a finite-dimensional model")
    cert = gz.drazin_inverse(A, ctx.cfg)
    regular = gz.verify_certificate(A, cert.inverse, ctx.cfg, kind="gz")
    extra = [c for c in regular.checks if c.name in ("regularity", "tst_drazin")]
    checks = sorted(cert.checks + extra, key=lambda c: c.name)
    return SuiteOutcome(name="drazin", checks=_prefixed("drazin", checks))


def _truncation_agreement(m: om.Diagonal, sigma: ss.SpectralSetSelection, inverse: om.Diagonal, ctx: SuiteContext) -> Check:
    S = om.spectrum(m, ctx.cfg)
    base = om.truncate(m, ctx.size)
    entries = om.leading_entries(m, ctx.size)
    chosen = [complex(t) for t in entries if not isinstance(t, complex) and ss.selection_contains(S, sigma, t)]
    try:
        numeric = gz.gz_inverse_for_set(base, chosen, cfg=ctx.cfg)
    except GzSpecError as exc:
        return Check(name="truncation_agreement", passed=False, detail=str(exc))
    exact = om.truncate(inverse, ctx.size)
    residual = lk.norm(numeric.inverse - exact)
    tolerance = ctx.cfg.residual_tol * max(1.0, lk.norm(exact))
    return Check(name="truncation_agreement", passed=residual <= tolerance, residual=residual)


def gz_suite(ctx: SuiteContext) -> SuiteOutcome:
    m = ctx.model
    if isinstance(m, om.Diagonal) and not m.is_finite:
        if not om.classify(m, ss.ZERO, ctx.cfg).is_gz:
            return SuiteOutcome.skip("gz", "0 is not a g_z-invertible point")
        sigma = _zero_spectral_set(om.spectrum(m, ctx.cfg))
        try:
            inverse, cert = om.gz_inverse_diagonal(m, sigma)
        except (InvalidSpectralSetError, UnsupportedSpectralShapeError) as exc:
            return SuiteOutcome.skip("gz", str(exc))
        checks = cert.checks + [_truncation_agreement(m, sigma, inverse, ctx)]
        return SuiteOutcome(name="gz", checks=_prefixed("gz", sorted(checks, key=lambda c: c.name)))
    A = _finite_matrix(m)
    if A is None:
        return SuiteOutcome.skip("gz", "needs a finite-dimensional or diagonal model")
    checks = []
    base = _zero_selection(A, ctx.cfg)
    cert = gz.gz_inverse_for_set(A, base, cfg=ctx.cfg)
    checks += _prefixed("gz", cert.checks, "zero")
    # Also exercise a selection that keeps the smallest nonzero eigenvalue group.
    grouped = gz.eigenvalue_groups(A, ctx.cfg)
    nonzero = [grouped.values[grouped.groups[g]] for g in grouped.nonzero()]
    if len(nonzero) > 1:
        smallest = complex(min(nonzero, key=lambda members: float(np.min(np.abs(members))))[0])
        cert = gz.gz_inverse_for_set(A, base + [smallest], cfg=ctx.cfg)
        checks += _prefixed("gz", cert.checks, "extended")
    return SuiteOutcome(name="gz", checks=checks)


def splits_suite(ctx: SuiteContext) -> SuiteOutcome:
    A = _finite_matrix(ctx.model)
    if A is None:
        return SuiteOutcome.skip("splits", "needs a finite-dimensional model")
    decomposition = gz.spectral_decomposition(A, _zero_selection(A, ctx.cfg), ctx.cfg)
    P = decomposition.projection
    checks = list(decomposition.checks)
    checks += gz.additive_split(A, P, ctx.cfg).checks
    checks += gz.multiplicative_split(A, P, ctx.cfg).checks
    return SuiteOutcome(name="splits", checks=_prefixed("splits", sorted(checks, key=lambda c: c.name)))


def punctured_suite(ctx: SuiteContext) -> SuiteOutcome:
    A = _finite_matrix(ctx.model)
    if A is None:
        return SuiteOutcome.skip("punctured", "needs a finite-dimensional model")
    decomposition = gz.spectral_decomposition(A, _zero_selection(A, ctx.cfg), ctx.cfg)
    P = np.eye(A.shape[0], dtype=complex) - decomposition.projection
    try:
        report = gz.punctured_neighborhood_check(A, P, ctx.samples, ctx.cfg)
    except DegenerateRestrictionError as exc:
        return SuiteOutcome.skip("punctured", str(exc))
    checks = [
        Check(
            name=f"sample_{j:02d}",
            passed=s.passed,
            detail=f"kernel_core={s.kernel_core_dim} range_h0_codim={s.range_h0_codim}",
        )
        for j, s in enumerate(report.samples)
    ]
    return SuiteOutcome(name="punctured", checks=_prefixed("punctured", checks))


def _index_text(value: int | float) -> str:
    return str(value) if isinstance(value, int) else ("inf" if value > 0 else "-inf")


def _index_laws(m: Any, cfg: ToleranceConfig, tag: str) -> list[Check]:
    base = om.index(m, ss.ZERO, cfg)
    checks = []
    dual = om.index(om.adjoint_model(m), ss.ZERO, cfg)
    checks.append(
        Check(name=f"{tag}adjoint", passed=dual == -base, detail=f"ind={_index_text(base)} ind*={_index_text(dual)}")
    )
    for n in INDEX_POWERS:
        powered = om.index(om.power_model(m, n), ss.ZERO, cfg)
        checks.append(
            Check(name=f"{tag}power_{n}", passed=powered == n * base, detail=f"ind^{n}={_index_text(powered)}")
        )
    return checks


def index_suite(ctx: SuiteContext) -> SuiteOutcome:
    m = ctx.model
    try:
        checks = _index_laws(m, ctx.cfg, "")
        if isinstance(m, om.DirectSum):
            parts = [om.index(s, ss.ZERO, ctx.cfg) for s in m.summands]
            total = om.index(m, ss.ZERO, ctx.cfg)
            checks.append(
                Check(
                    name="direct_sum",
                    passed=total == sum(parts),
                    detail=" ".join(_index_text(p) for p in parts) + f" -> {_index_text(total)}",
                )
            )
            for i, summand in enumerate(m.summands):
                checks += _index_laws(summand, ctx.cfg, f"summand_{i}.")
            spectra = [om.spectrum(s, ctx.cfg) for s in m.summands]
            whole = om.spectrum(m, ctx.cfg)
            checks.append(
                Check(
                    name="zeroloid_direct_sum",
                    passed=ss.is_zeroloid(whole) == all(ss.is_zeroloid(S) for S in spectra),
                )
            )
    except (NotSemiFredholmError, UnsupportedSpectralShapeError) as exc:
        return SuiteOutcome.skip("index", str(exc))
    return SuiteOutcome(name="index", checks=_prefixed("index", sorted(checks, key=lambda c: c.name)))


def _random_value(rng: np.random.Generator) -> ss.ExactComplex:
    choice = int(rng.integers(0, 3))
    if choice == 0:
        return ss.ZERO
    if choice == 1:
        return ss.ExactComplex(7)
    return ss.ExactComplex(Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 10))))


def perturbation_suite(ctx: SuiteContext) -> SuiteOutcome:
    m = ctx.model
    if isinstance(m, om.DiagonalPerturbation):
        m = m.base
    if not isinstance(m, om.Diagonal):
        return SuiteOutcome.skip("perturbation", "needs a diagonal model")
    rng = np.random.default_rng(settings.RANDOM_SEED)
    span = om.entry_count(m) or 2 * ctx.size
    before = om.classify(m, ss.ZERO, ctx.cfg)
    checks = []
    for edit in range(PERTURBATION_EDITS):
        slot = int(rng.integers(0, span))
        value = _random_value(rng)
        name = f"edit_{edit}"
        try:
            perturbed = om.perturb(m, {slot: value})
        except GzSpecError as exc:
            checks.append(Check(name=name, passed=False, detail=str(exc)))
            continue
        after = om.classify(perturbed, ss.ZERO, ctx.cfg)
        checks.append(
            Check(
                name=name,
                passed=before.is_gz == after.is_gz,
                detail=f"entry {slot} -> {value}: {before.tier.value} -> {after.tier.value}",
            )
        )
    return SuiteOutcome(name="perturbation", checks=_prefixed("perturbation", checks))


SUITES: dict[str, Callable[[SuiteContext], SuiteOutcome]] = {
    "drazin": drazin_suite,
    "gz": gz_suite,
    "index": index_suite,
    "perturbation": perturbation_suite,
    "punctured": punctured_suite,
    "splits": splits_suite,
}
SUITE_NAMES = tuple(SUITES) + ("all",)


def _run_one(name: str, ctx: SuiteContext) -> SuiteOutcome:
    logger.info("Suite started", suite=name)
    try:
        outcome = SUITES[name](ctx)
    except GzSpecError as exc:
        logger.warning("Suite aborted", suite=name, error=str(exc))
        check = Check(name=f"{name}.completed", passed=False, detail=str(exc))
        return SuiteOutcome(name=name, checks=[check])
    failed = [c.name for c in outcome.checks if not c.passed]
    if failed:
        logger.warning("Suite has failing checks", suite=name, failed=failed)
    return outcome


def run_suites(name: str, ctx: SuiteContext) -> list[SuiteOutcome]:
    """Run one suite, or every suite concurrently for ``all``; results come back in name order."""
    if name not in SUITE_NAMES:
        raise SpecParseError(f"unknown suite {name!r}; choose from {', '.join(SUITE_NAMES)}")
    if name != "all":
        return [_run_one(name, ctx)]
    names = sorted(SUITES)
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        outcomes = list(pool.map(lambda n: _run_one(n, ctx), names))
    return outcomes
