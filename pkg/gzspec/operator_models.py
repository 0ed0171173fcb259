"""Structured models of infinite-dimensional operators.

Spectra are exact SpectrumModels. Kernel and cokernel dimensions come from counting diagonal
entries or from the classical theory of weighted shifts, so indices and classification tiers
are decided without floating point, except for FiniteMatrix where eigen-data is numeric.
"""

from __future__ import annotations

import math
from enum import Enum
from fractions import Fraction
from itertools import cycle, islice, repeat
from typing import Annotated, Any, Iterator, Literal, NamedTuple, Optional, Sequence, Union

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from gzspec import linalg_kernel as lk
from gzspec import spectral_sets as ss
from gzspec.config import ToleranceConfig, settings
from gzspec.core.exceptions import (
    InternalInvariantError,
    InvalidSpectralSetError,
    NotSemiFredholmError,
    UnsupportedSpectralShapeError,
)
from gzspec.gz_calculus import eigenvalue_groups
from gzspec.schemas import Check
from gzspec.spectral_sets import (
    Cluster,
    ExactComplex,
    GeometricTail,
    MobiusMap,
    PowerMap,
    PowerTail,
    SpectralClass,
    SpectralSetSelection,
    SpectrumModel,
)

logger = structlog.get_logger()

Multiplicity = Optional[int]  # None is infinite


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


def _add(a: Multiplicity, b: Multiplicity) -> Multiplicity:
    return None if a is None or b is None else a + b


# ---------------------------------------------------------------------------
# Variants
# ---------------------------------------------------------------------------


class PointEntry(_Frozen):
    value: ExactComplex
    multiplicity: Multiplicity = 1

    @field_validator("value", mode="before")
    @classmethod
    def coerce_value(cls, v: Any) -> ExactComplex:
        return ExactComplex.parse(v)

    @field_validator("multiplicity")
    @classmethod
    def check_multiplicity(cls, v: Multiplicity) -> Multiplicity:
        if v is not None and v < 1:
            raise ValueError("multiplicity must be positive or infinite")
        return v


class GzEntryMap(_Frozen):
    """d -> 0 on the selected spectral set, d -> 1/d elsewhere."""

    kind: Literal["gz"] = "gz"
    selection: SpectralSetSelection


class PowerEntryMap(_Frozen):
    kind: Literal["power"] = "power"
    n: int = Field(ge=1)


class AffineEntryMap(_Frozen):
    kind: Literal["affine"] = "affine"
    a: ExactComplex
    b: ExactComplex

    @field_validator("a", "b", mode="before")
    @classmethod
    def coerce_scalar(cls, v: Any) -> ExactComplex:
        return ExactComplex.parse(v)


EntryMap = Annotated[Union[GzEntryMap, PowerEntryMap, AffineEntryMap], Field(discriminator="kind")]


class FiniteMatrix(_Frozen):
    variant: Literal["matrix"] = "matrix"
    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def check_matrix(cls, v: Any) -> np.ndarray:
        A = lk.as_matrix(v)
        lk.require_square(A)
        return A

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FiniteMatrix) and np.array_equal(self.matrix, other.matrix)

    __hash__ = None


class Diagonal(_Frozen):
    variant: Literal["diagonal"] = "diagonal"
    points: tuple[PointEntry, ...] = ()
    clusters: tuple[Cluster, ...] = ()
    entry_maps: tuple[EntryMap, ...] = ()

    @model_validator(mode="after")
    def check_nonempty(self) -> "Diagonal":
        if not self.points and not self.clusters:
            raise ValueError("a diagonal model needs at least one entry")
        return self

    @property
    def is_finite(self) -> bool:
        return not self.clusters and all(p.multiplicity is not None for p in self.points)


class ConstantWeights(_Frozen):
    """Weights prefix..., then c forever."""

    kind: Literal["constant"] = "constant"
    value: Fraction
    prefix: tuple[Fraction, ...] = ()

    @field_validator("value", mode="before")
    @classmethod
    def coerce_value(cls, v: Any) -> Fraction:
        return ExactComplex.parse(v).re

    @field_validator("prefix", mode="before")
    @classmethod
    def coerce_prefix(cls, v: Any) -> tuple:
        return tuple(ExactComplex.parse(w).re for w in v)

    @model_validator(mode="after")
    def check_positive(self) -> "ConstantWeights":
        if self.value <= 0 or any(w <= 0 for w in self.prefix):
            raise ValueError("shift weights must be positive")
        return self

    def weight(self, k: int) -> Fraction:
        return self.prefix[k] if k < len(self.prefix) else self.value


class NullWeights(_Frozen):
    """Weights given by a positive tail decaying to 0."""

    kind: Literal["null"] = "null"
    decay: Union[PowerTail, GeometricTail] = Field(discriminator="kind")

    @field_validator("decay", mode="before")
    @classmethod
    def parse_decay(cls, v: Any) -> Any:
        if isinstance(v, str):
            text = v.replace(" ", "")
            if not text.startswith("1/n"):
                raise ValueError(f"unknown decay {v!r}; use '1/n', '1/n^e' or a tail")
            exponent = text[4:] if text.startswith("1/n^") else "1"
            return PowerTail(scale=ss.ONE, exponent=exponent)
        return v

    @model_validator(mode="after")
    def check_positive(self) -> "NullWeights":
        decay = self.decay
        scalars = [decay.scale] if isinstance(decay, PowerTail) else [decay.base, decay.ratio]
        if any(s.im != 0 or s.re <= 0 for s in scalars):
            raise ValueError("shift weights must be positive")
        return self

    def weight(self, k: int) -> complex:
        value = self.decay.offset(self.decay.start + k)
        if value is not None:
            return complex(value)
        return complex(self.decay.numeric(np.array([self.decay.start + k]))[0])


class WeightedShift(_Frozen):
    """Power of a unilateral weighted shift. Left: L e_{k+1} = w_k e_k. Right: R e_k = w_k e_{k+1}."""

    variant: Literal["shift"] = "shift"
    direction: Literal["left", "right"]
    weights: Union[ConstantWeights, NullWeights] = Field(discriminator="kind")
    power: int = Field(default=1, ge=1)


class DirectSum(_Frozen):
    variant: Literal["direct_sum"] = "direct_sum"
    summands: tuple["OperatorModel", ...]

    @field_validator("summands")
    @classmethod
    def check_summands(cls, v: tuple) -> tuple:
        if not v:
            raise ValueError("a direct sum needs at least one summand")
        return v


class Affine(_Frozen):
    """a T + b I."""

    variant: Literal["affine"] = "affine"
    model: "OperatorModel"
    a: ExactComplex
    b: ExactComplex = ss.ZERO

    @field_validator("a", "b", mode="before")
    @classmethod
    def coerce_scalar(cls, v: Any) -> ExactComplex:
        return ExactComplex.parse(v)

    @field_validator("a")
    @classmethod
    def check_a(cls, v: ExactComplex) -> ExactComplex:
        if v.is_zero():
            raise ValueError("affine models need a nonzero coefficient")
        return v


class DiagonalPerturbation(_Frozen):
    """A diagonal model with finitely many entries edited; commutes with its base."""

    variant: Literal["perturbation"] = "perturbation"
    base: Diagonal
    support: tuple[tuple[int, ExactComplex], ...]

    @field_validator("support", mode="before")
    @classmethod
    def coerce_support(cls, v: Any) -> tuple:
        items = v.items() if isinstance(v, dict) else v
        pairs = {int(k): ExactComplex.parse(value) for k, value in items}
        if any(k < 0 for k in pairs):
            raise ValueError("support indices are nonnegative")
        return tuple(sorted(pairs.items()))

    @model_validator(mode="after")
    def check_support(self) -> "DiagonalPerturbation":
        size = entry_count(self.base)
        if size is not None and any(k >= size for k, _ in self.support):
            raise ValueError("support index beyond the last diagonal entry")
        return self


OperatorModel = Annotated[
    Union[FiniteMatrix, Diagonal, WeightedShift, DirectSum, Affine, DiagonalPerturbation],
    Field(discriminator="variant"),
]

DirectSum.model_rebuild()
Affine.model_rebuild()


class PointData(BaseModel):
    alpha: Multiplicity
    beta: Multiplicity
    isolated: bool
    in_spectrum: bool
    closed_range: bool = True


class Tier(str, Enum):
    INVERTIBLE = "invertible"
    DRAZIN = "drazin"
    GENERALIZED_DRAZIN = "generalized_drazin"
    GZ_INVERTIBLE = "gz_invertible"
    NONE = "none"

    @property
    def rank(self) -> int:
        return {"invertible": 4, "drazin": 3, "generalized_drazin": 2, "gz_invertible": 1, "none": 0}[
            self.value
        ]


class LatticeTag(BaseModel):
    tier: Tier
    browder: bool
    left_gz: Optional[bool] = None
    right_gz: Optional[bool] = None

    @property
    def is_gz(self) -> bool:
        return self.tier.rank >= Tier.GZ_INVERTIBLE.rank


class DiagonalCertificate(BaseModel):
    sampled: int
    sample_bound: int
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


# ---------------------------------------------------------------------------
# Diagonal entry bookkeeping
# ---------------------------------------------------------------------------


class _Atoms(NamedTuple):
    points: list[tuple[ExactComplex, Multiplicity]]
    clusters: list[Cluster]

    def spectrum(self) -> SpectrumModel:
        return SpectrumModel.build(points=[v for v, _ in self.points], clusters=self.clusters)

    def count(self, x: ExactComplex) -> Multiplicity:
        total: Multiplicity = 0
        for value, multiplicity in self.points:
            if value == x:
                total = _add(total, multiplicity)
        for c in self.clusters:
            total = _add(total, c.count(x))
        return total


def _reciprocal(c: Cluster) -> Cluster:
    return c.apply_map(MobiusMap.reciprocal())


def _gz_atoms(atoms: _Atoms, sigma: SpectralSetSelection) -> _Atoms:
    S = atoms.spectrum()
    ss.reciprocal_gz_image(S, sigma)  # validates the selection
    points: list[tuple[ExactComplex, Multiplicity]] = []
    clusters: list[Cluster] = []

    def send(value: ExactComplex | None, multiplicity: Multiplicity, selected: bool) -> None:
        if value is None:
            raise UnsupportedSpectralShapeError("cannot move an irrational cluster term")
        points.append((ss.ZERO, multiplicity) if selected else (1 / value, multiplicity))

    for value, multiplicity in atoms.points:
        send(value, multiplicity, ss.selection_contains(S, sigma, value))
    for i, c in enumerate(atoms.clusters):
        selected = i in sigma.selected_clusters
        moved = sigma.moved(i)
        remainder = c
        if moved:
            cut = max(moved) + 1
            for rel in range(cut):
                side = selected != (rel in moved)
                send(c.parent_term(rel), 1, side)
                if c.depth == 1:
                    continue
                for family in c.family_clusters(rel):
                    if side:
                        points.append((ss.ZERO, None))
                    else:
                        clusters.append(_reciprocal(family))
            remainder = c.drop_prefix(cut)
        if selected:
            points.append((ss.ZERO, None))
        else:
            clusters.append(_reciprocal(remainder))
    return _Atoms(points=points, clusters=clusters)


def _map_atoms(atoms: _Atoms, entry_map: Any) -> _Atoms:
    if isinstance(entry_map, GzEntryMap):
        return _gz_atoms(atoms, entry_map.selection)
    if isinstance(entry_map, PowerEntryMap):
        m: ss.ExactMap = PowerMap(n=entry_map.n)
    else:
        m = MobiusMap.affine(entry_map.a, entry_map.b)
    return _Atoms(
        points=[(m.apply(v), k) for v, k in atoms.points],
        clusters=[c.apply_map(m) for c in atoms.clusters],
    )


def _stages(d: Diagonal) -> list[_Atoms]:
    """Atoms before each entry map, then the final atoms."""
    atoms = _Atoms(points=[(p.value, p.multiplicity) for p in d.points], clusters=list(d.clusters))
    stages = [atoms]
    for entry_map in d.entry_maps:
        atoms = _map_atoms(atoms, entry_map)
        stages.append(atoms)
    return stages


def _base_entries(d: Diagonal) -> Iterator[ExactComplex | complex]:
    for p in d.points:
        if p.multiplicity is not None:
            yield from repeat(p.value, p.multiplicity)
    streams = [repeat(p.value) for p in d.points if p.multiplicity is None]
    streams += [c.iter_entries() for c in d.clusters]
    if not streams:
        return
    for stream in cycle(streams):
        yield next(stream)


def _map_entry(value: ExactComplex | complex, entry_map: Any, stage: SpectrumModel) -> ExactComplex | complex:
    if isinstance(entry_map, PowerEntryMap):
        return value**entry_map.n
    if isinstance(entry_map, AffineEntryMap):
        if isinstance(value, complex):
            return complex(entry_map.a) * value + complex(entry_map.b)
        return entry_map.a * value + entry_map.b
    if isinstance(value, complex):
        raise UnsupportedSpectralShapeError("g_z maps need rational diagonal entries")
    if ss.selection_contains(stage, entry_map.selection, value):
        return ss.ZERO
    return 1 / value


def diagonal_entries(d: Diagonal) -> Iterator[ExactComplex | complex]:
    """Diagonal entries in slot order: finite multiplicities first, then streams round-robin."""
    stages = [s.spectrum() for s in _stages(d)[:-1]] if d.entry_maps else []
    for value in _base_entries(d):
        for entry_map, stage in zip(d.entry_maps, stages):
            value = _map_entry(value, entry_map, stage)
        yield value


def entry_count(d: Diagonal) -> int | None:
    if not d.is_finite:
        return None
    return sum(p.multiplicity for p in d.points)


def leading_entries(m: Diagonal | DiagonalPerturbation, n: int) -> list[ExactComplex | complex]:
    if isinstance(m, DiagonalPerturbation):
        entries = leading_entries(m.base, n)
        edits = dict(m.support)
        return [edits.get(k, value) for k, value in enumerate(entries)]
    return list(islice(diagonal_entries(m), n))


# ---------------------------------------------------------------------------
# Spectra and point data
# ---------------------------------------------------------------------------


def _rational(value: float) -> Fraction:
    approx = Fraction(value).limit_denominator(settings.RATIONALIZE_MAX_DENOMINATOR)
    # a nonzero eigenvalue must not round onto 0
    return approx if approx or value == 0 else Fraction(value)


def _matrix_eigenvalues(A: np.ndarray, cfg: ToleranceConfig) -> tuple[bool, list[tuple[ExactComplex, complex]]]:
    """Whether 0 is an eigenvalue, and each nonzero group as (exact value, numeric centre)."""
    grouped = eigenvalue_groups(A, cfg)
    centres = []
    for g in grouped.nonzero():
        centre = complex(np.mean(grouped.values[grouped.groups[g]]))
        centres.append((ExactComplex(_rational(centre.real), _rational(centre.imag)), centre))
    return grouped.zero is not None, centres


def _matrix_spectrum(A: np.ndarray, cfg: ToleranceConfig) -> SpectrumModel:
    has_zero, centres = _matrix_eigenvalues(A, cfg)
    values = [ss.ZERO] if has_zero else []
    return ss.finite_set(*values, *(value for value, _ in centres))


def _matrix_point_data(A: np.ndarray, x: ExactComplex, cfg: ToleranceConfig) -> PointData:
    has_zero, centres = _matrix_eigenvalues(A, cfg)
    if x.is_zero():
        centre = 0j if has_zero else None
    else:
        centre = next((c for value, c in centres if value == x), None)
    if centre is None:
        return PointData(alpha=0, beta=0, isolated=False, in_spectrum=False)
    chain = lk.kernel_chain(A - centre * np.eye(A.shape[0]), cfg)
    alpha = max(1, chain.increments[0] if chain.increments else 0)
    return PointData(alpha=alpha, beta=alpha, isolated=True, in_spectrum=True)


def _shift_radius_sq(m: WeightedShift) -> Fraction | None:
    if isinstance(m.weights, NullWeights):
        return None
    return (m.weights.value * m.weights.value) ** m.power


def _perturbation_counts(m: DiagonalPerturbation) -> tuple[_Atoms, dict, dict]:
    atoms = _stages(m.base)[-1]
    last = max(k for k, _ in m.support) + 1 if m.support else 0
    old = leading_entries(m.base, last)
    removed: dict[ExactComplex, int] = {}
    added: dict[ExactComplex, int] = {}
    for k, value in m.support:
        previous = old[k]
        if isinstance(previous, complex):
            raise UnsupportedSpectralShapeError("cannot edit an irrational diagonal entry exactly")
        removed[previous] = removed.get(previous, 0) + 1
        added[value] = added.get(value, 0) + 1
    return atoms, removed, added


def spectrum(m: Any, cfg: ToleranceConfig | None = None) -> SpectrumModel:
    cfg = cfg or settings.tolerances()
    if isinstance(m, FiniteMatrix):
        return _matrix_spectrum(m.matrix, cfg)
    if isinstance(m, Diagonal):
        return _stages(m)[-1].spectrum()
    if isinstance(m, WeightedShift):
        radius_sq = _shift_radius_sq(m)
        if radius_sq is None:
            return ss.finite_set(ss.ZERO)
        return SpectrumModel(disks=(ss.Disk(center=ss.ZERO, radius_sq=radius_sq),))
    if isinstance(m, DirectSum):
        result = spectrum(m.summands[0], cfg)
        for summand in m.summands[1:]:
            result = ss.union(result, spectrum(summand, cfg))
        return result
    if isinstance(m, Affine):
        return ss.affine_image(spectrum(m.model, cfg), m.a, m.b)
    if isinstance(m, DiagonalPerturbation):
        atoms, removed, added = _perturbation_counts(m)
        base = atoms.spectrum()
        derived = ss.acc(base)
        gone = []
        for value, k in removed.items():
            remaining = atoms.count(value)
            if remaining is not None and remaining - k + added.get(value, 0) <= 0 and not derived.contains(value):
                gone.append(value)
        return ss.union(ss.without(base, gone), ss.finite_set(*added))
    raise TypeError(f"Unknown operator model {type(m).__name__}")


def _isolated(S: SpectrumModel, x: ExactComplex) -> bool:
    if any(d.contains(x) for d in S.disks):
        return False
    countable = SpectrumModel(points=S.points, clusters=S.clusters)
    return countable.contains(x) and not ss.acc(countable).contains(x)


def point_data(m: Any, point: Any, cfg: ToleranceConfig | None = None) -> PointData:
    """Exact kernel and cokernel dimensions of m - λ."""
    cfg = cfg or settings.tolerances()
    x = ExactComplex.parse(point)
    if isinstance(m, FiniteMatrix):
        return _matrix_point_data(m.matrix, x, cfg)
    if isinstance(m, (Diagonal, DiagonalPerturbation)):
        if isinstance(m, Diagonal):
            count = _stages(m)[-1].count(x)
        else:
            atoms, removed, added = _perturbation_counts(m)
            count = atoms.count(x)
            if count is not None:
                count = count - removed.get(x, 0) + added.get(x, 0)
        S = spectrum(m, cfg)
        in_acc = ss.acc(S).contains(x)
        return PointData(
            alpha=count,
            beta=count,
            isolated=S.contains(x) and not in_acc,
            in_spectrum=S.contains(x),
            closed_range=not in_acc,
        )
    if isinstance(m, WeightedShift):
        return _shift_point_data(m, x)
    if isinstance(m, DirectSum):
        parts = [point_data(s, x, cfg) for s in m.summands]
        alpha: Multiplicity = 0
        beta: Multiplicity = 0
        for part in parts:
            alpha = _add(alpha, part.alpha)
            beta = _add(beta, part.beta)
        in_spectrum = any(p.in_spectrum for p in parts)
        S = spectrum(m, cfg)
        return PointData(
            alpha=alpha,
            beta=beta,
            isolated=in_spectrum and _isolated(S, x),
            in_spectrum=in_spectrum,
            closed_range=all(p.closed_range for p in parts),
        )
    if isinstance(m, Affine):
        return point_data(m.model, (x - m.b) / m.a, cfg)
    raise TypeError(f"Unknown operator model {type(m).__name__}")


def _shift_point_data(m: WeightedShift, x: ExactComplex) -> PointData:
    k = m.power
    r2 = _shift_radius_sq(m)
    if r2 is None:
        if not x.is_zero():
            return PointData(alpha=0, beta=0, isolated=False, in_spectrum=False)
        if m.direction == "left":
            return PointData(alpha=k, beta=None, isolated=True, in_spectrum=True, closed_range=False)
        return PointData(alpha=0, beta=None, isolated=True, in_spectrum=True, closed_range=False)
    distance = x.abs2()
    if distance > r2:
        return PointData(alpha=0, beta=0, isolated=False, in_spectrum=False)
    if distance == r2:
        raise UnsupportedSpectralShapeError("point lies on the boundary of a shift spectrum")
    if m.direction == "left":
        return PointData(alpha=k, beta=0, isolated=False, in_spectrum=True)
    return PointData(alpha=0, beta=k, isolated=False, in_spectrum=True)


def index(m: Any, point: Any, cfg: ToleranceConfig | None = None) -> int | float:
    """alpha - beta; ±inf when exactly one side is infinite."""
    data = point_data(m, point, cfg)
    if not data.closed_range or (data.alpha is None and data.beta is None):
        raise NotSemiFredholmError(f"m - λ is not semi-Fredholm at λ = {ExactComplex.parse(point)}")
    if data.alpha is None:
        return math.inf
    if data.beta is None:
        return -math.inf
    return data.alpha - data.beta


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


def _finite_chains(m: Any, x: ExactComplex, cfg: ToleranceConfig) -> bool:
    """Finite ascent and descent of m - λ."""
    if isinstance(m, (FiniteMatrix, Diagonal, DiagonalPerturbation)):
        return True
    if isinstance(m, WeightedShift):
        return not point_data(m, x, cfg).in_spectrum
    if isinstance(m, DirectSum):
        return all(_finite_chains(s, x, cfg) for s in m.summands)
    if isinstance(m, Affine):
        return _finite_chains(m.model, (x - m.b) / m.a, cfg)
    raise TypeError(f"Unknown operator model {type(m).__name__}")


def _one_sided(m: Any, x: ExactComplex, tier: Tier, cfg: ToleranceConfig) -> tuple[bool | None, bool | None]:
    if tier.rank >= Tier.GZ_INVERTIBLE.rank:
        return True, True
    if isinstance(m, (FiniteMatrix, Diagonal, DiagonalPerturbation)):
        return False, False
    if isinstance(m, WeightedShift):
        if isinstance(m.weights, ConstantWeights) and x.is_zero():
            return (False, True) if m.direction == "left" else (True, False)
        return None, None
    if isinstance(m, Affine):
        inner = classify(m.model, (x - m.b) / m.a, cfg)
        return inner.left_gz, inner.right_gz
    if isinstance(m, DirectSum):
        tags = [classify(s, x, cfg) for s in m.summands]
        left = [t.left_gz for t in tags]
        right = [t.right_gz for t in tags]
        return (
            None if None in left else all(left),
            None if None in right else all(right),
        )
    return None, None


def classify(m: Any, point: Any, cfg: ToleranceConfig | None = None) -> LatticeTag:
    cfg = cfg or settings.tolerances()
    x = ExactComplex.parse(point)
    spectral = ss.classify_point(spectrum(m, cfg), x)
    if spectral == SpectralClass.INVERTIBLE:
        tier = Tier.INVERTIBLE
    elif spectral == SpectralClass.GENERALIZED_DRAZIN:
        tier = Tier.DRAZIN if _finite_chains(m, x, cfg) else Tier.GENERALIZED_DRAZIN
    elif spectral == SpectralClass.GZ_INVERTIBLE:
        tier = Tier.GZ_INVERTIBLE
    else:
        tier = Tier.NONE
    browder = tier == Tier.INVERTIBLE
    if tier == Tier.DRAZIN:
        browder = point_data(m, x, cfg).alpha is not None
    left, right = _one_sided(m, x, tier, cfg)
    return LatticeTag(tier=tier, browder=browder, left_gz=left, right_gz=right)


# ---------------------------------------------------------------------------
# Derived models
# ---------------------------------------------------------------------------


def _conjugate_selection(sigma: SpectralSetSelection) -> SpectralSetSelection:
    return SpectralSetSelection(
        selected_points=[p.conjugate() for p in sigma.selected_points],
        selected_clusters=sigma.selected_clusters,
        boundary_moves=sigma.boundary_moves,
    )


def _conjugate_map(entry_map: Any) -> Any:
    if isinstance(entry_map, GzEntryMap):
        return GzEntryMap(selection=_conjugate_selection(entry_map.selection))
    if isinstance(entry_map, AffineEntryMap):
        return AffineEntryMap(a=entry_map.a.conjugate(), b=entry_map.b.conjugate())
    return entry_map


def adjoint_model(m: Any) -> Any:
    if isinstance(m, FiniteMatrix):
        return FiniteMatrix(matrix=lk.adjoint(m.matrix))
    if isinstance(m, Diagonal):
        return Diagonal(
            points=tuple(PointEntry(value=p.value.conjugate(), multiplicity=p.multiplicity) for p in m.points),
            clusters=tuple(c.conjugate() for c in m.clusters),
            entry_maps=tuple(_conjugate_map(e) for e in m.entry_maps),
        )
    if isinstance(m, WeightedShift):
        flipped = "right" if m.direction == "left" else "left"
        return m.model_copy(update={"direction": flipped})
    if isinstance(m, DirectSum):
        return DirectSum(summands=tuple(adjoint_model(s) for s in m.summands))
    if isinstance(m, Affine):
        return Affine(model=adjoint_model(m.model), a=m.a.conjugate(), b=m.b.conjugate())
    if isinstance(m, DiagonalPerturbation):
        return DiagonalPerturbation(
            base=adjoint_model(m.base), support=[(k, v.conjugate()) for k, v in m.support]
        )
    raise TypeError(f"Unknown operator model {type(m).__name__}")


def power_model(m: Any, n: int) -> Any:
    if n < 1:
        raise ValueError("power must be positive")
    if n == 1:
        return m
    if isinstance(m, FiniteMatrix):
        return FiniteMatrix(matrix=lk.matrix_power(m.matrix, n))
    if isinstance(m, Diagonal):
        return m.model_copy(update={"entry_maps": m.entry_maps + (PowerEntryMap(n=n),)})
    if isinstance(m, WeightedShift):
        return m.model_copy(update={"power": m.power * n})
    if isinstance(m, DirectSum):
        return DirectSum(summands=tuple(power_model(s, n) for s in m.summands))
    if isinstance(m, DiagonalPerturbation):
        support = []
        for k, v in m.support:
            support.append((k, v**n))
        return DiagonalPerturbation(base=power_model(m.base, n), support=support)
    if isinstance(m, Affine):
        if m.b.is_zero():
            return Affine(model=power_model(m.model, n), a=m.a**n, b=ss.ZERO)
        if isinstance(m.model, Diagonal):
            shifted = m.model.model_copy(
                update={"entry_maps": m.model.entry_maps + (AffineEntryMap(a=m.a, b=m.b),)}
            )
            return power_model(shifted, n)
        raise UnsupportedSpectralShapeError("powers of a translated non-diagonal model are not modelled")
    raise TypeError(f"Unknown operator model {type(m).__name__}")


def _sample_values(*models: SpectrumModel, terms: int = 4) -> list[ExactComplex]:
    values: list[ExactComplex] = []
    for S in models:
        values.extend(S.points)
        for c in S.clusters:
            values.append(c.limit)
            for rel in range(terms):
                term = c.parent_term(rel)
                if term is not None:
                    values.append(term)
    return values


def _entrywise_function(originals: list, images: list) -> bool:
    """S commutes with T when equal entries of T carry equal entries of S."""
    images_of: dict = {}
    return all(images_of.setdefault(t, s) == s for t, s in zip(originals, images))


def _regularity(chosen: SpectrumModel, rest: SpectrumModel, images: list, samples: int) -> Check:
    """The unselected part stays a positive distance from 0 and from the selected part."""
    if rest.is_empty:
        return Check(name="regularity", passed=True, detail="no unselected spectrum")
    rest_values = np.array([complex(v) for v in _sample_values(rest, terms=samples)], dtype=complex)
    chosen_values = np.array([complex(v) for v in _sample_values(chosen, terms=samples)], dtype=complex)
    floor = float(np.min(np.abs(rest_values)))
    separation = (
        float(np.min(np.abs(chosen_values[:, None] - rest_values[None, :]))) if chosen_values.size else math.inf
    )
    largest = max((abs(complex(s)) for s in images), default=0.0)
    bounded = floor > 0 and largest <= (1.0 + 1e-12) / floor
    return Check(
        name="regularity",
        passed=bounded and separation > 0,
        residual=largest * floor if floor > 0 else None,
        detail=f"unselected spectrum {floor:.3g} from 0, {separation:.3g} from the selected part",
    )


def gz_inverse_diagonal(
    m: Diagonal, sigma: SpectralSetSelection, samples: int | None = None
) -> tuple[Diagonal, DiagonalCertificate]:
    """Entrywise g_z-inverse: 1/d off the selected set, 0 on it.

    Checks look at the leading `samples` diagonal entries; the certificate records that bound.
    """
    samples = samples or 4 * settings.VERIFY_TRUNCATION
    S = spectrum(m)
    if not ss.is_spectral_set(S, sigma):
        raise InvalidSpectralSetError("selection is not a spectral set")
    expected_spectrum = ss.reciprocal_gz_image(S, sigma)
    inverse = m.model_copy(update={"entry_maps": m.entry_maps + (GzEntryMap(selection=sigma),)})

    originals = leading_entries(m, samples)
    images = leading_entries(inverse, samples)
    inner = core = True
    for t, s in zip(originals, images):
        if isinstance(t, complex) or isinstance(s, complex):
            raise UnsupportedSpectralShapeError("g_z maps need rational diagonal entries")
        inner &= s * t * s == s
        expected_core = -t if ss.selection_contains(S, sigma, t) else ss.ZERO
        core &= t * t * s - t == expected_core

    chosen = ss.selection_model(S, sigma)
    rest = ss.complement_model(S, sigma)
    core_model = ss.affine_image(chosen, -1, 0)
    if not rest.is_empty:
        core_model = ss.union(core_model, ss.finite_set(ss.ZERO))

    actual = spectrum(inverse)
    law = all(
        actual.contains(v) == expected_spectrum.contains(v)
        for v in _sample_values(actual, expected_spectrum)
    )
    checks = [
        Check(
            name="commutation",
            passed=_entrywise_function(originals, images),
            detail="S is an entrywise function of T",
        ),
        Check(name="core_entries", passed=core),
        Check(name="inner", passed=inner),
        _regularity(chosen, rest, images, samples),
        Check(name="spectrum_law", passed=law),
        Check(name="zeroloid_core", passed=ss.is_zeroloid(core_model)),
    ]
    certificate = DiagonalCertificate(sampled=len(originals), sample_bound=samples, checks=checks)
    logger.info(
        "Diagonal g_z inverse built",
        sampled=len(originals),
        sample_bound=samples,
        passed=certificate.passed,
    )
    return inverse, certificate


def perturb(m: Diagonal, support: dict[int, Any] | Sequence[tuple[int, Any]]) -> DiagonalPerturbation:
    """Finite-support diagonal edit; the g_z tier at 0 must survive."""
    perturbed = DiagonalPerturbation(base=m, support=support)
    before = classify(m, ss.ZERO)
    after = classify(perturbed, ss.ZERO)
    if before.is_gz != after.is_gz:
        raise InternalInvariantError(
            f"finite perturbation changed the g_z tier at 0: {before.tier.value} -> {after.tier.value}"
        )
    logger.debug("Perturbation keeps the g_z tier", before=before.tier.value, after=after.tier.value)
    return perturbed


def is_finite_model(m: Any) -> bool:
    if isinstance(m, FiniteMatrix):
        return True
    if isinstance(m, Diagonal):
        return m.is_finite
    if isinstance(m, DiagonalPerturbation):
        return m.base.is_finite
    if isinstance(m, Affine):
        return is_finite_model(m.model)
    if isinstance(m, DirectSum):
        return all(is_finite_model(s) for s in m.summands)
    return False


def truncate(m: Any, n: int) -> np.ndarray:
    """Leading n x n compression; finite summands are kept whole."""
    if n < 1:
        raise ValueError("truncation size must be positive")
    if isinstance(m, FiniteMatrix):
        size = min(n, m.matrix.shape[0])
        return m.matrix[:size, :size].copy()
    if isinstance(m, (Diagonal, DiagonalPerturbation)):
        entries = leading_entries(m, n)
        return np.diag(np.array([complex(e) for e in entries], dtype=complex))
    if isinstance(m, WeightedShift):
        block = np.zeros((n, n), dtype=complex)
        for k in range(n - 1):
            w = complex(m.weights.weight(k))
            if m.direction == "left":
                block[k, k + 1] = w
            else:
                block[k + 1, k] = w
        return np.linalg.matrix_power(block, m.power)
    if isinstance(m, DirectSum):
        blocks = [
            truncate(s, n if not is_finite_model(s) else full_size(s)) for s in m.summands
        ]
        return lk.direct_sum(*blocks)
    if isinstance(m, Affine):
        block = truncate(m.model, n)
        return complex(m.a) * block + complex(m.b) * np.eye(block.shape[0])
    raise TypeError(f"Unknown operator model {type(m).__name__}")


def full_size(m: Any) -> int:
    if isinstance(m, FiniteMatrix):
        return m.matrix.shape[0]
    if isinstance(m, Diagonal):
        return entry_count(m)
    if isinstance(m, DiagonalPerturbation):
        return entry_count(m.base)
    if isinstance(m, Affine):
        return full_size(m.model)
    if isinstance(m, DirectSum):
        return sum(full_size(s) for s in m.summands)
    raise TypeError(f"{type(m).__name__} has no finite size")
