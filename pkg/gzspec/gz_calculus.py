"""Drazin and g_z-inverses of matrices.

Two independent routes are kept side by side: the algebraic one (core-nilpotent blocks, or
(A + rP)^-1 (I - P) with P a spectral projection) and the holomorphic one (trapezoidal
quadrature of the resolvent on a circle). Every result ships with a certificate of residuals.
"""

from __future__ import annotations

from typing import Any, Callable, Literal, Optional, Sequence

import numpy as np
import scipy.linalg
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.optimize import linear_sum_assignment

from gzspec import linalg_kernel as lk
from gzspec.config import ToleranceConfig, settings
from gzspec.core.exceptions import (
    AdmissibilityError,
    ConditioningError,
    ContourTooCloseError,
    DegenerateRestrictionError,
    GzSpecError,
    InvalidProjectionError,
    InvalidSpectralSetError,
    NoConvergenceError,
    NoSeparatingContourError,
    ShapeMismatchError,
    UndefinedGammaError,
)
from gzspec.schemas import Check

logger = structlog.get_logger()

EPS = float(np.finfo(float).eps)


class Contour(BaseModel):
    """Positively oriented circle."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    center: complex
    radius: float = Field(gt=0)
    initial_nodes: int = Field(default_factory=lambda: settings.CONTOUR_INITIAL_NODES, ge=4)
    max_nodes: int = Field(default_factory=lambda: settings.CONTOUR_MAX_NODES, ge=4)

    @field_validator("center", mode="before")
    @classmethod
    def coerce_center(cls, v: Any) -> complex:
        if isinstance(v, (list, tuple)):
            return complex(float(v[0]), float(v[1]))
        return complex(v)

    @model_validator(mode="after")
    def check_budget(self) -> "Contour":
        if self.max_nodes < self.initial_nodes:
            raise ValueError("max_nodes must be at least initial_nodes")
        return self

    def encloses(self, z: complex) -> bool:
        return abs(z - self.center) < self.radius

    def clearance(self, points: np.ndarray) -> float:
        if points.size == 0:
            return np.inf
        return float(np.min(np.abs(np.abs(points - self.center) - self.radius)))

    def check_clearance(self, points: np.ndarray) -> None:
        gap = self.clearance(points)
        if gap < settings.CONTOUR_CLEARANCE * self.radius:
            raise ContourTooCloseError(
                f"contour passes within {gap:.3e} of an eigenvalue (radius {self.radius:.3e})"
            )


class InverseCertificate(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: Literal["drazin", "gz", "external"]
    inverse: np.ndarray
    commutation_residual: float = Field(ge=0)
    inner_residual: float = Field(ge=0)
    power_residual: Optional[float] = Field(default=None, ge=0)
    core_residual: Optional[int] = None
    claimed_index: Optional[int] = None
    checks: list[Check] = []

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def add(self, name: str, passed: bool, residual: float | None = None, detail: str | None = None):
        self.checks.append(Check(name=name, passed=bool(passed), residual=residual, detail=detail))
        self.checks.sort(key=lambda c: c.name)


class SplitResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    first: np.ndarray
    second: np.ndarray
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


class PuncturedSample(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    point: complex
    kernel_core_dim: int
    range_h0_codim: int
    passed: bool


class PuncturedReport(BaseModel):
    gamma: float
    alpha_m: int
    beta_m: int
    samples: list[PuncturedSample]

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.samples)


class SpectralDecomposition(BaseModel):
    """A = A_M ⊕ A_N with A_M invertible and A_N carrying the selected eigenvalues."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    projection: np.ndarray
    invertible_part: np.ndarray
    selected_part: np.ndarray
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


def _tol(cfg: ToleranceConfig | None) -> ToleranceConfig:
    return cfg or settings.tolerances()


def _scale(*norms: float) -> float:
    return max(1.0, float(np.prod(norms)))


# ---------------------------------------------------------------------------
# Contour quadrature
# ---------------------------------------------------------------------------


def _node_terms(
    A: np.ndarray, contour: Contour, f: Callable[[complex], complex], thetas: np.ndarray
) -> np.ndarray:
    n = A.shape[0]
    identity = np.eye(n, dtype=complex)
    total = np.zeros((n, n), dtype=complex)
    for theta in thetas:
        direction = np.exp(1j * theta)
        z = contour.center + contour.radius * direction
        resolvent = scipy.linalg.solve(z * identity - A, identity)
        total += f(z) * contour.radius * direction * resolvent
    return total


def contour_integral(
    A: np.ndarray,
    contour: Contour,
    f: Callable[[complex], complex] = lambda z: 1.0,
    cfg: ToleranceConfig | None = None,
) -> np.ndarray:
    """(1/2πi) ∮ f(z) (zI - A)^-1 dz by the trapezoidal rule with node doubling."""
    cfg = _tol(cfg)
    A = lk.as_matrix(A)
    lk.require_square(A)
    contour.check_clearance(lk.eigenvalues(A))

    nodes = contour.initial_nodes
    running = _node_terms(A, contour, f, 2 * np.pi * np.arange(nodes) / nodes)
    previous = running / nodes
    while 2 * nodes <= contour.max_nodes:
        odd = 2 * np.pi * (2 * np.arange(nodes) + 1) / (2 * nodes)
        running = running + _node_terms(A, contour, f, odd)
        nodes *= 2
        current = running / nodes
        change = lk.norm(current - previous)
        if change < cfg.quadrature_tol * max(1.0, lk.norm(current)):
            logger.debug("Contour quadrature converged", nodes=nodes, change=change)
            return current
        previous = current
    raise NoConvergenceError(f"quadrature did not converge within {contour.max_nodes} nodes")


def riesz_projection(A: np.ndarray, contour: Contour, cfg: ToleranceConfig | None = None) -> np.ndarray:
    return contour_integral(A, contour, cfg=cfg)


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


def _power_bound(cfg: ToleranceConfig, k: int, a_norm: float, power_norm: float, s_norm: float, n: int) -> float:
    """residual_tol·‖A^k‖ plus the rounding floor of forming A^k(I - SA) by repeated products."""
    rounding = n * EPS * (a_norm**k + power_norm * a_norm * s_norm)
    return cfg.residual_tol * power_norm + rounding


def _claimed_index(A: np.ndarray, S: np.ndarray, cfg: ToleranceConfig) -> tuple[int | None, float | None]:
    """First k with ‖A^k S A - A^k‖ within the power bound."""
    n = A.shape[0]
    a_norm, s_norm = lk.norm(A), lk.norm(S)
    power = np.eye(n, dtype=complex)
    residual_part = power - S @ A
    for k in range(n + 1):
        residual = lk.norm(residual_part)
        if residual <= _power_bound(cfg, k, a_norm, lk.norm(power), s_norm, n):
            return k, residual
        power = A @ power
        residual_part = A @ residual_part
    return None, None


def _core_degree(A: np.ndarray, S: np.ndarray, cfg: ToleranceConfig) -> int | None:
    """Smallest k with (A²S - A)^k (I - AS) negligible; None when not nilpotent."""
    n = A.shape[0]
    a_norm, s_norm = lk.norm(A), lk.norm(S)
    core = A @ A @ S - A
    power = np.eye(n, dtype=complex)
    residual_part = power - A @ S
    for k in range(n + 1):
        if lk.norm(residual_part) <= _power_bound(cfg, k, a_norm, lk.norm(power), s_norm, n):
            return k
        power = A @ power
        residual_part = core @ residual_part
    return None


def _core_nilpotent_inverse(A: np.ndarray, cfg: ToleranceConfig) -> tuple[np.ndarray, int, int]:
    n = lk.require_square(A)
    chain = lk.kernel_chain(A, cfg)
    p = chain.ascent
    if p == 0:
        if np.linalg.cond(A) > settings.CONDITION_LIMIT:
            raise ConditioningError("matrix is too ill-conditioned to invert")
        return scipy.linalg.inv(A), 0, n
    nil = chain.kernel_of_power(p)
    core = lk.k_basis(A, cfg)
    r = core.dimension
    if r == 0:
        return np.zeros_like(A), p, 0
    if r + nil.dimension != n:
        raise ConditioningError("range and kernel of A^p do not split the space")
    W = np.hstack([core.vectors, nil.vectors])
    B = lk.restrict(A, core)
    if np.linalg.cond(B) > settings.CONDITION_LIMIT or np.linalg.cond(W) > settings.CONDITION_LIMIT:
        raise ConditioningError("restricted core block is too ill-conditioned")
    middle = scipy.linalg.block_diag(scipy.linalg.inv(B), np.zeros((n - r, n - r)))
    return W @ middle @ scipy.linalg.inv(W), p, r


def verify_certificate(
    A: np.ndarray,
    S: np.ndarray,
    cfg: ToleranceConfig | None = None,
    kind: Literal["drazin", "gz", "external"] = "external",
) -> InverseCertificate:
    """Recompute every residual for a candidate inverse; failures land in the checks."""
    cfg = _tol(cfg)
    A = lk.as_matrix(A)
    S = lk.as_matrix(S)
    lk.require_square(A)
    if S.shape != A.shape:
        raise ShapeMismatchError(f"inverse shape {S.shape} does not match {A.shape}")

    scale = _scale(lk.norm(A), lk.norm(S))
    commutation = lk.norm(A @ S - S @ A)
    inner = lk.norm(S @ A @ S - S)
    claimed, power_residual = _claimed_index(A, S, cfg)
    core = _core_degree(A, S, cfg)

    cert = InverseCertificate(
        kind=kind,
        inverse=S,
        commutation_residual=commutation,
        inner_residual=inner,
        power_residual=power_residual,
        core_residual=core,
        claimed_index=claimed,
    )
    cert.add("commutation", commutation <= cfg.residual_tol * scale, commutation)
    cert.add("inner", inner <= cfg.residual_tol * scale * max(1.0, lk.norm(S)), inner)

    if kind == "drazin":
        cert.add("power", claimed is not None, power_residual)
        cert.add("core_nilpotent", core is not None and core == claimed)
        index_dis = lk.dis(A, cfg)
        cert.add("index_equals_dis", claimed == index_dis, detail=f"dis={index_dis}")
        return cert

    try:
        p, q = lk.ascent_descent(S, cfg)
        d = lk.dis(S, cfg)
        cert.add("regularity", p == q == d and d <= 1, detail=f"ascent={p} descent={q} dis={d}")
    except GzSpecError as exc:
        cert.add("regularity", False, detail=str(exc))
    try:
        tst = A @ S @ A
        drazin_of_s, _, _ = _core_nilpotent_inverse(S, cfg)
        residual = lk.norm(tst - drazin_of_s)
        cert.add("tst_drazin", residual <= cfg.residual_tol * _scale(lk.norm(tst)), residual)
    except GzSpecError as exc:
        cert.add("tst_drazin", False, detail=str(exc))
    return cert


# ---------------------------------------------------------------------------
# Inverses
# ---------------------------------------------------------------------------


def drazin_inverse(A: np.ndarray, cfg: ToleranceConfig | None = None) -> InverseCertificate:
    cfg = _tol(cfg)
    A = lk.as_matrix(A)
    S, p, rank = _core_nilpotent_inverse(A, cfg)
    cert = verify_certificate(A, S, cfg, kind="drazin")
    logger.info("Drazin inverse built", index=cert.claimed_index, ascent=p, core_rank=rank)
    return cert


def cluster_eigenvalues(
    values: np.ndarray, cfg: ToleranceConfig | None = None, scale: float = 1.0
) -> list[np.ndarray]:
    """Single-linkage groups of eigenvalue indices, ordered by first member."""
    cfg = _tol(cfg)
    values = np.asarray(values, dtype=complex)
    if values.size == 0:
        return []
    if values.size == 1:
        return [np.array([0])]
    coords = np.column_stack([values.real, values.imag])
    labels = fcluster(linkage(coords, method="single"), t=cfg.cluster_gap(scale), criterion="distance")
    groups: dict[int, list[int]] = {}
    for i, label in enumerate(labels):
        groups.setdefault(int(label), []).append(i)
    return sorted((np.array(g) for g in groups.values()), key=lambda g: int(g[0]))


def separating_contour(inside: np.ndarray, outside: np.ndarray) -> Contour:
    """Circle about the centroid of `inside` that leaves every `outside` point out."""
    inside = np.asarray(inside, dtype=complex)
    outside = np.asarray(outside, dtype=complex)
    center = complex(np.mean(inside))
    inner = float(np.max(np.abs(inside - center)))
    outer = float(np.min(np.abs(outside - center))) if outside.size else inner + 2.0 * max(1.0, inner)
    radius = 0.5 * (inner + outer)
    if outer - inner < 2 * settings.CONTOUR_CLEARANCE * radius:
        raise NoSeparatingContourError("no circle about the complement centroid separates the spectra")
    return Contour(center=center, radius=radius)


def separating_contours(
    inside: np.ndarray, outside: np.ndarray, cfg: ToleranceConfig | None = None
) -> list[Contour]:
    """One circle when it fits, else one circle per eigenvalue group of `inside`."""
    try:
        return [separating_contour(inside, outside)]
    except NoSeparatingContourError:
        pass
    inside = np.asarray(inside, dtype=complex)
    outside = np.asarray(outside, dtype=complex)
    scale = float(np.max(np.abs(np.concatenate([inside, outside]))))
    contours = []
    for group in cluster_eigenvalues(inside, cfg, scale):
        others = np.concatenate([np.delete(inside, group), outside])
        contours.append(separating_contour(inside[group], others))
    logger.debug("Complement split across circles", circles=len(contours))
    return contours


def _integrate(
    A: np.ndarray, contours: Sequence[Contour], f: Callable[[complex], complex], cfg: ToleranceConfig
) -> np.ndarray:
    return sum(contour_integral(A, c, f, cfg) for c in contours)


class EigenvalueGroups(BaseModel):
    """Eigenvalue groups by algebraic multiplicity, with the 0-cluster taken from the kernel chain."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray
    groups: list[np.ndarray]
    gap: float
    zero: Optional[int] = None
    # largest Jordan block over all groups
    index_bound: int = 0

    def centre(self, g: int) -> complex:
        if g == self.zero:
            return 0j
        return complex(np.mean(self.values[self.groups[g]]))

    def radius(self, g: int) -> float:
        return float(np.max(np.abs(self.values[self.groups[g]] - self.centre(g))))

    def hits(self, value: complex) -> list[int]:
        """Groups whose centre or members lie within reach of value."""
        return [
            g
            for g, members in enumerate(self.groups)
            if abs(value - self.centre(g)) <= max(self.gap, self.radius(g))
            or np.min(np.abs(self.values[members] - value)) <= self.gap
        ]

    def members(self, positions: Sequence[int]) -> np.ndarray:
        if not positions:
            return np.empty(0, dtype=complex)
        return np.concatenate([self.values[self.groups[g]] for g in positions])

    def nonzero(self) -> list[int]:
        return [g for g in range(len(self.groups)) if g != self.zero]


def _multiplicity_groups(
    A: np.ndarray, eigs: np.ndarray, positions: np.ndarray, cfg: ToleranceConfig, scale: float
) -> list[np.ndarray]:
    """Single-linkage groups of eigs[positions].

    Pairs within the cluster gap always join. Farther pairs, up to the spread a Jordan block of
    full size can show, join only when A - cI has as much nilpotent part as the merged group
    has members, c being the merged group's mean.
    """
    if positions.size == 0:
        return []
    values = eigs[positions]
    gap = cfg.cluster_gap(scale)
    reach = max(gap, cfg.rank_rtol ** (1.0 / A.shape[0]) * scale)
    identity = np.eye(A.shape[0], dtype=complex)
    parent = list(range(values.size))

    def root(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    distances = np.abs(values[:, None] - values[None, :])
    pairs = sorted(
        (float(distances[i, j]), i, j)
        for i in range(values.size)
        for j in range(i + 1, values.size)
        if distances[i, j] <= reach
    )
    for d, i, j in pairs:
        ri, rj = root(i), root(j)
        if ri == rj:
            continue
        if d > gap:
            merged = [k for k in range(values.size) if root(k) in (ri, rj)]
            centre = complex(np.mean(values[merged]))
            if lk.kernel_chain(A - centre * identity, cfg).nilpotent_dimension < len(merged):
                continue
        parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for k in range(values.size):
        groups.setdefault(root(k), []).append(int(positions[k]))
    return [np.array(sorted(g)) for g in groups.values()]


def eigenvalue_groups(A: np.ndarray, cfg: ToleranceConfig | None = None) -> EigenvalueGroups:
    """The algebraic multiplicity of 0 is dim N(A^p); those eigenvalues of least modulus form its cluster."""
    cfg = _tol(cfg)
    A = lk.as_matrix(A)
    eigs = lk.eigenvalues(A)
    chain = lk.kernel_chain(A, cfg)
    scale = lk.norm(A)
    order = np.argsort(np.abs(eigs), kind="stable")
    zero_members = np.sort(order[: chain.nilpotent_dimension])
    rest = np.sort(order[chain.nilpotent_dimension :])
    groups = _multiplicity_groups(A, eigs, rest, cfg, scale)
    if zero_members.size:
        groups.append(zero_members)
    groups.sort(key=lambda g: int(g[0]))
    zero = None
    if zero_members.size:
        zero = next(i for i, g in enumerate(groups) if g is zero_members)
    index_bound = chain.ascent
    identity = np.eye(A.shape[0], dtype=complex)
    for g in groups:
        if g is not zero_members and g.size > 1:
            centre = complex(np.mean(eigs[g]))
            index_bound = max(index_bound, lk.kernel_chain(A - centre * identity, cfg).ascent)
    return EigenvalueGroups(
        values=eigs,
        groups=groups,
        gap=cfg.cluster_gap(scale),
        zero=zero,
        index_bound=index_bound,
    )


def _selection_split(grouped: EigenvalueGroups, sigma: Sequence[complex]) -> tuple[np.ndarray, np.ndarray]:
    chosen: set[int] = set()
    for value in sigma:
        hits = grouped.hits(value)
        if not hits:
            raise InvalidSpectralSetError(f"{value} is not an eigenvalue")
        chosen.update(hits)
    if grouped.zero is not None and grouped.zero not in chosen:
        raise InvalidSpectralSetError("the eigenvalue cluster at 0 must be selected")
    rest = [g for g in range(len(grouped.groups)) if g not in chosen]
    return grouped.members(sorted(chosen)), grouped.members(rest)


def _eigenvalue_tolerance(cfg: ToleranceConfig, scale: float, index: int) -> float:
    """Eigenvalue perturbation allowed for a cluster whose Jordan blocks reach size `index`."""
    base = cfg.residual_tol * _scale(scale)
    if index <= 1:
        return base
    return base ** (1.0 / index) * _scale(scale) ** (1.0 - 1.0 / index)


def match_spectra(a: np.ndarray, b: np.ndarray) -> float:
    """Largest distance in the optimal one-to-one matching of two multisets."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.size != b.size:
        raise ShapeMismatchError(f"cannot match {a.size} values with {b.size}")
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def _gz_formula(A: np.ndarray, projection: np.ndarray, r: complex) -> np.ndarray:
    identity = np.eye(A.shape[0], dtype=complex)
    shifted = A + r * projection
    if np.linalg.cond(shifted) > settings.CONDITION_LIMIT:
        raise ConditioningError("A + rP is too ill-conditioned")
    return scipy.linalg.solve(shifted, identity - projection)


def gz_inverse_for_set(
    A: np.ndarray,
    sigma: Sequence[complex],
    r: complex | None = None,
    cfg: ToleranceConfig | None = None,
    contour: Contour | None = None,
) -> InverseCertificate:
    """(A + rP_σ)^-1 (I - P_σ), cross-checked against the contour route and a second r."""
    cfg = _tol(cfg)
    A = lk.as_matrix(A)
    n = lk.require_square(A)
    a_norm = lk.norm(A)
    grouped = eigenvalue_groups(A, cfg)
    selected, complement = _selection_split(grouped, sigma)

    bound = float(np.max(np.abs(selected))) if selected.size else 0.0
    if r is None:
        r = 2.0 * (1.0 + bound)
    if selected.size and abs(r) <= bound:
        raise AdmissibilityError(f"|r| = {abs(r):.3e} must exceed max |λ| over σ = {bound:.3e}")

    identity = np.eye(n, dtype=complex)
    S_contour: np.ndarray | None
    if complement.size == 0:
        S = np.zeros_like(A)
        S_contour = S
        S_second = S
    elif selected.size == 0 and contour is None:
        # P_σ = 0: plain inversion; the contour route needs a circle avoiding 0
        S = _gz_formula(A, np.zeros_like(A), 0.0)
        S_second = S
        try:
            S_contour = _integrate(A, separating_contours(complement, np.zeros(1), cfg), lambda z: 1.0 / z, cfg)
        except NoSeparatingContourError:
            logger.info("No circle avoids 0; contour route skipped")
            S_contour = None
    else:
        if contour is None:
            contours = separating_contours(complement, np.concatenate([selected, [0.0]]), cfg)
        else:
            for value in np.concatenate([selected, [0.0]]):
                if contour.encloses(value):
                    raise NoSeparatingContourError("supplied contour encloses part of σ or 0")
            if not all(contour.encloses(value) for value in complement):
                raise NoSeparatingContourError("supplied contour misses part of the complement")
            contours = [contour]
        projection = identity - _integrate(A, contours, lambda z: 1.0, cfg)
        S = _gz_formula(A, projection, r)
        S_second = _gz_formula(A, projection, 2 * r)
        S_contour = _integrate(A, contours, lambda z: 1.0 / z, cfg)

    cert = verify_certificate(A, S, cfg, kind="gz")
    tolerance = cfg.residual_tol * _scale(lk.norm(S))
    if S_contour is not None:
        agreement = lk.norm(S - S_contour)
        cert.add("contour_agreement", agreement <= tolerance, agreement)
    independence = lk.norm(S - S_second)
    cert.add("r_independence", independence <= tolerance, independence)

    core_eigs = lk.eigenvalues(A @ A @ S - A)
    expected_core = np.concatenate([-selected, np.zeros(complement.size)])
    core_distance = match_spectra(core_eigs, expected_core)
    core_tolerance = _eigenvalue_tolerance(cfg, a_norm, grouped.index_bound)
    cert.add("core_spectrum", core_distance <= core_tolerance, core_distance)

    expected = np.concatenate([np.zeros(selected.size), 1.0 / complement]) if complement.size else np.zeros(n)
    mapping = match_spectra(lk.eigenvalues(S), expected)
    cert.add("spectrum_mapping", mapping <= 1e-6 * _scale(lk.norm(S)), mapping)

    logger.info(
        "g_z inverse built",
        selected=int(selected.size),
        complement=int(complement.size),
        r=str(r),
        passed=cert.passed,
    )
    return cert


def spectral_decomposition(
    A: np.ndarray, sigma: Sequence[complex], cfg: ToleranceConfig | None = None
) -> SpectralDecomposition:
    cfg = _tol(cfg)
    A = lk.as_matrix(A)
    n = lk.require_square(A)
    grouped = eigenvalue_groups(A, cfg)
    selected, complement = _selection_split(grouped, sigma)
    identity = np.eye(n, dtype=complex)
    if complement.size == 0:
        projection = identity
    elif selected.size == 0:
        projection = np.zeros_like(A)
    else:
        contours = separating_contours(complement, np.concatenate([selected, [0.0]]), cfg)
        projection = identity - _integrate(A, contours, lambda z: 1.0, cfg)

    checks = []
    invertible_basis = lk.range_basis(identity - projection, cfg) if complement.size else lk.SubspaceBasis.zero(n)
    selected_basis = lk.range_basis(projection, cfg) if selected.size else lk.SubspaceBasis.zero(n)
    invertible_part = lk.restrict(A, invertible_basis)
    selected_part = lk.restrict(A, selected_basis)
    if invertible_part.size:
        checks.append(Check(name="invertible_part", passed=lk.numerical_rank(invertible_part, cfg) == invertible_part.shape[0]))
    try:
        shifted = drazin_inverse(A + projection, cfg)
        checks.append(Check(name="shifted_drazin", passed=shifted.passed))
    except GzSpecError as exc:
        checks.append(Check(name="shifted_drazin", passed=False, detail=str(exc)))
    carried = lk.eigenvalues(A @ projection)
    expected = np.concatenate([selected, np.zeros(complement.size)])
    distance = match_spectra(carried, expected)
    carried_tolerance = _eigenvalue_tolerance(cfg, lk.norm(A), grouped.index_bound)
    checks.append(Check(name="carried_spectrum", passed=distance <= carried_tolerance, residual=distance))
    return SpectralDecomposition(
        projection=projection,
        invertible_part=invertible_part,
        selected_part=selected_part,
        checks=sorted(checks, key=lambda c: c.name),
    )


# ---------------------------------------------------------------------------
# Splits and the punctured neighbourhood
# ---------------------------------------------------------------------------


def _check_projection(A: np.ndarray, P: np.ndarray, cfg: ToleranceConfig) -> np.ndarray:
    P = lk.as_matrix(P)
    if P.shape != A.shape:
        raise ShapeMismatchError("projection shape does not match the matrix")
    p_norm = lk.norm(P)
    idempotence = lk.norm(P @ P - P)
    commutation = lk.norm(A @ P - P @ A)
    if idempotence > cfg.residual_tol * _scale(p_norm, p_norm):
        raise InvalidProjectionError(f"P is not idempotent (residual {idempotence:.3e})")
    if commutation > cfg.residual_tol * _scale(lk.norm(A), p_norm):
        raise InvalidProjectionError(f"P does not commute with A (residual {commutation:.3e})")
    return P


def additive_split(A: np.ndarray, P: np.ndarray, cfg: ToleranceConfig | None = None) -> SplitResult:
    """A = S + R with S = AP, R = A(I - P) and RS = SR = 0."""
    cfg = _tol(cfg)
    A = lk.as_matrix(A)
    P = _check_projection(A, P, cfg)
    identity = np.eye(A.shape[0], dtype=complex)
    S = A @ P
    R = A @ (identity - P)
    tol = cfg.residual_tol * _scale(lk.norm(A), lk.norm(A))
    residuals = {
        "additive_sum": lk.norm(S + R - A),
        "additive_annihilate": max(lk.norm(R @ S), lk.norm(S @ R)),
        "additive_commute": lk.norm(R @ A - A @ R),
    }
    checks = [Check(name=k, passed=v <= tol, residual=v) for k, v in sorted(residuals.items())]
    return SplitResult(first=S, second=R, checks=checks)


def multiplicative_split(A: np.ndarray, P: np.ndarray, cfg: ToleranceConfig | None = None) -> SplitResult:
    """A = SR = RS = S + R - I with S = AP + (I - P), R = P + A(I - P)."""
    cfg = _tol(cfg)
    A = lk.as_matrix(A)
    P = _check_projection(A, P, cfg)
    identity = np.eye(A.shape[0], dtype=complex)
    S = A @ P + (identity - P)
    R = P + A @ (identity - P)
    tol = cfg.residual_tol * _scale(lk.norm(S), lk.norm(R))
    residuals = {
        "multiplicative_left": lk.norm(S @ R - A),
        "multiplicative_right": lk.norm(R @ S - A),
        "multiplicative_sum": lk.norm(S + R - identity - A),
    }
    checks = [Check(name=k, passed=v <= tol, residual=v) for k, v in sorted(residuals.items())]
    return SplitResult(first=S, second=R, checks=checks)


def punctured_neighborhood_check(
    A: np.ndarray, P: np.ndarray, sample_count: int = 8, cfg: ToleranceConfig | None = None
) -> PuncturedReport:
    """Kernel/core and range/H0 dimensions at points of the circle |λ| = γ(A_M)/2."""
    cfg = _tol(cfg)
    A = lk.as_matrix(A)
    n = lk.require_square(A)
    P = _check_projection(A, P, cfg)
    basis = lk.range_basis(P, cfg)
    if basis.dimension == 0:
        raise DegenerateRestrictionError("the projection has trivial range")
    restricted = lk.restrict(A, basis)
    try:
        g = lk.gamma(restricted, cfg)
    except UndefinedGammaError as exc:
        raise DegenerateRestrictionError("γ of the restriction is 0") from exc
    alpha_m = restricted.shape[1] - lk.numerical_rank(restricted, cfg)
    beta_m = restricted.shape[0] - lk.numerical_rank(restricted, cfg)

    identity = np.eye(n, dtype=complex)
    samples = []
    for j in range(sample_count):
        point = 0.5 * g * np.exp(2j * np.pi * j / sample_count)
        shifted = A - point * identity
        kernel_core = lk.intersection_basis(lk.kernel_basis(shifted, cfg), lk.k_basis(shifted, cfg), cfg)
        range_h0 = lk.sum_basis(lk.range_basis(shifted, cfg), lk.h0_basis(shifted, cfg), cfg)
        samples.append(
            PuncturedSample(
                point=complex(point),
                kernel_core_dim=kernel_core.dimension,
                range_h0_codim=range_h0.codimension,
                passed=kernel_core.dimension == alpha_m and range_h0.codimension == beta_m,
            )
        )
    logger.debug("Punctured neighbourhood sampled", gamma=g, samples=sample_count)
    return PuncturedReport(gamma=g, alpha_m=alpha_m, beta_m=beta_m, samples=samples)
