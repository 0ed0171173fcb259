"""Exact algebra of closed countable spectra.

A spectrum is a finite set of isolated candidate points plus finitely many clusters. A cluster
is a convergent injective sequence together with its limit (depth 1). It may also be a sequence
of such clusters whose limits converge to the outer limit (depth 2). Scalars are Gaussian
rationals, so every membership question is decided exactly.
"""

from __future__ import annotations

import math
from enum import Enum
from fractions import Fraction
from itertools import count
from typing import Any, ClassVar, Iterator, Literal, Sequence, Union

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from gzspec.config import settings
from gzspec.core.exceptions import (
    DepthOverflowError,
    InvalidSpectralSetError,
    MalformedSelectionError,
    UnsupportedSpectralShapeError,
)

logger = structlog.get_logger()

# depth-2 construction compares this many leading terms per template and family
_COINCIDENCE_WINDOW = 12


# ---------------------------------------------------------------------------
# Scalars
# ---------------------------------------------------------------------------


def _iroot(value: int, k: int) -> int | None:
    """Exact integer k-th root, or None when value is not a perfect power."""
    if value < 0:
        return None
    if value < 2:
        return value
    x = 1 << ((value.bit_length() + k - 1) // k)
    while True:
        y = ((k - 1) * x + value // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    return x if x**k == value else None


def _log_fraction(value: Fraction) -> float:
    return math.log(value.numerator) - math.log(value.denominator)


def _to_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"Non-finite value {value!r}")
        return Fraction(value).limit_denominator(settings.RATIONALIZE_MAX_DENOMINATOR)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"Cannot read {value!r} as a rational number")


class ExactComplex:
    """Gaussian rational re + i*im with exact arithmetic."""

    __slots__ = ("re", "im")

    def __init__(self, re: Any = 0, im: Any = 0):
        self.re = _to_fraction(re)
        self.im = _to_fraction(im)

    @classmethod
    def parse(cls, value: Any) -> "ExactComplex":
        if isinstance(value, ExactComplex):
            return value
        if isinstance(value, complex):
            return cls(value.real, value.imag)
        if isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValueError(f"Expected [re, im], got {value!r}")
            return cls(value[0], value[1])
        return cls(value, 0)

    # arithmetic
    @staticmethod
    def _coerce(other: Any) -> "ExactComplex | None":
        if isinstance(other, ExactComplex):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return ExactComplex(other, 0)
        return None

    def __add__(self, other: Any) -> "ExactComplex":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return ExactComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other: Any) -> "ExactComplex":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return ExactComplex(self.re - o.re, self.im - o.im)

    def __rsub__(self, other: Any) -> "ExactComplex":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other: Any) -> "ExactComplex":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return ExactComplex(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "ExactComplex":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        den = o.abs2()
        if den == 0:
            raise ZeroDivisionError("division by exact zero")
        num = self * o.conjugate()
        return ExactComplex(num.re / den, num.im / den)

    def __rtruediv__(self, other: Any) -> "ExactComplex":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self) -> "ExactComplex":
        return ExactComplex(-self.re, -self.im)

    def __pow__(self, n: int) -> "ExactComplex":
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        result = ExactComplex(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conjugate(self) -> "ExactComplex":
        return ExactComplex(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __eq__(self, other: object) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def sort_key(self) -> tuple[Fraction, Fraction]:
        return (self.re, self.im)

    def to_json(self) -> list[str]:
        return [
            f"{self.re.numerator}/{self.re.denominator}",
            f"{self.im.numerator}/{self.im.denominator}",
        ]

    def __repr__(self) -> str:
        return f"ExactComplex('{self.re}', '{self.im}')"

    def __str__(self) -> str:
        if self.im == 0:
            return str(self.re)
        return f"{self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i"


ZERO = ExactComplex(0)
ONE = ExactComplex(1)


def _magnitude(z: ExactComplex) -> float:
    a2 = z.abs2()
    if a2 == 0:
        return 0.0
    return math.exp(0.5 * _log_fraction(a2))


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


def _exact(value: Any) -> ExactComplex:
    return ExactComplex.parse(value)


# ---------------------------------------------------------------------------
# Tails and maps
# ---------------------------------------------------------------------------


class GeometricTail(_Frozen):
    """Offsets base * ratio**n for n >= 0."""

    kind: Literal["geometric"] = "geometric"
    base: ExactComplex
    ratio: ExactComplex

    start: ClassVar[int] = 0

    @field_validator("base", "ratio", mode="before")
    @classmethod
    def coerce_scalar(cls, v: Any) -> ExactComplex:
        return _exact(v)

    @model_validator(mode="after")
    def check_tail(self) -> "GeometricTail":
        if self.base.is_zero():
            raise ValueError("geometric tail needs a nonzero base")
        q2 = self.ratio.abs2()
        if not 0 < q2 < 1:
            raise ValueError("geometric tail needs 0 < |ratio| < 1")
        return self

    def offset(self, n: int) -> ExactComplex:
        return self.base * self.ratio**n

    def modulus(self, n: int) -> float:
        log2 = _log_fraction(self.base.abs2()) + n * _log_fraction(self.ratio.abs2())
        return math.exp(0.5 * log2)

    def numeric(self, indices: np.ndarray) -> np.ndarray:
        return complex(self.base) * np.power(complex(self.ratio), indices)

    def index_of(self, d: ExactComplex) -> int | None:
        if d.is_zero():
            return None
        r = d / self.base
        a2 = r.abs2()
        if a2 > 1:
            return None
        q2 = self.ratio.abs2()
        estimate = 0 if a2 == 1 else round(_log_fraction(a2) / _log_fraction(q2))
        for n in (estimate - 1, estimate, estimate + 1):
            if n >= 0 and q2**n == a2 and self.ratio**n == r:
                return n
        return None

    def scaled(self, c: ExactComplex) -> "GeometricTail":
        return GeometricTail(base=self.base * c, ratio=self.ratio)

    def powered(self, k: int) -> "GeometricTail":
        return GeometricTail(base=self.base**k, ratio=self.ratio**k)

    def conjugate(self) -> "GeometricTail":
        return GeometricTail(base=self.base.conjugate(), ratio=self.ratio.conjugate())

    def has_exact_terms(self) -> bool:
        return True


class PowerTail(_Frozen):
    """Offsets scale * n**(-exponent) for n >= 1."""

    kind: Literal["power"] = "power"
    scale: ExactComplex
    exponent: Fraction

    start: ClassVar[int] = 1

    @field_validator("scale", mode="before")
    @classmethod
    def coerce_scale(cls, v: Any) -> ExactComplex:
        return _exact(v)

    @field_validator("exponent", mode="before")
    @classmethod
    def coerce_exponent(cls, v: Any) -> Fraction:
        return _to_fraction(v)

    @model_validator(mode="after")
    def check_tail(self) -> "PowerTail":
        if self.scale.is_zero():
            raise ValueError("power tail needs a nonzero scale")
        if self.exponent <= 0:
            raise ValueError("power tail needs a positive exponent")
        return self

    def offset(self, n: int) -> ExactComplex | None:
        p, q = self.exponent.numerator, self.exponent.denominator
        root = n if q == 1 else _iroot(n, q)
        if root is None:
            return None
        return self.scale * Fraction(1, root**p)

    def modulus(self, n: int) -> float:
        return _magnitude(self.scale) * n ** (-float(self.exponent))

    def numeric(self, indices: np.ndarray) -> np.ndarray:
        return complex(self.scale) * np.power(indices.astype(float), -float(self.exponent))

    def index_of(self, d: ExactComplex) -> int | None:
        if d.is_zero():
            return None
        w = d / self.scale
        if w.im != 0 or w.re <= 0:
            return None
        p, q = self.exponent.numerator, self.exponent.denominator
        m = (1 / w.re) ** q
        if m.denominator != 1:
            return None
        n = _iroot(m.numerator, p)
        if n is None or n < 1:
            return None
        return n

    def scaled(self, c: ExactComplex) -> "PowerTail":
        return PowerTail(scale=self.scale * c, exponent=self.exponent)

    def powered(self, k: int) -> "PowerTail":
        return PowerTail(scale=self.scale**k, exponent=self.exponent * k)

    def conjugate(self) -> "PowerTail":
        return PowerTail(scale=self.scale.conjugate(), exponent=self.exponent)

    def has_exact_terms(self) -> bool:
        return self.exponent.denominator == 1


class MobiusMap(_Frozen):
    """z -> (a z + b) / (c z + d)."""

    kind: Literal["mobius"] = "mobius"
    a: ExactComplex
    b: ExactComplex
    c: ExactComplex
    d: ExactComplex

    @field_validator("a", "b", "c", "d", mode="before")
    @classmethod
    def coerce_coefficient(cls, v: Any) -> ExactComplex:
        return _exact(v)

    @model_validator(mode="after")
    def check_invertible(self) -> "MobiusMap":
        if (self.a * self.d - self.b * self.c).is_zero():
            raise ValueError("degenerate Mobius map")
        return self

    @classmethod
    def affine(cls, a: Any, b: Any) -> "MobiusMap":
        return cls(a=a, b=b, c=ZERO, d=ONE)

    @classmethod
    def reciprocal(cls) -> "MobiusMap":
        return cls(a=ZERO, b=ONE, c=ONE, d=ZERO)

    @property
    def is_affine(self) -> bool:
        return self.c.is_zero()

    def apply(self, z: ExactComplex) -> ExactComplex | None:
        den = self.c * z + self.d
        if den.is_zero():
            return None
        return (self.a * z + self.b) / den

    def inverse(self) -> "MobiusMap":
        return MobiusMap(a=self.d, b=-self.b, c=-self.c, d=self.a)

    def after(self, inner: "MobiusMap") -> "MobiusMap":
        """self composed with inner."""
        return MobiusMap(
            a=self.a * inner.a + self.b * inner.c,
            b=self.a * inner.b + self.b * inner.d,
            c=self.c * inner.a + self.d * inner.c,
            d=self.c * inner.b + self.d * inner.d,
        )

    def numeric(self, z: Any) -> Any:
        return (complex(self.a) * z + complex(self.b)) / (complex(self.c) * z + complex(self.d))

    def modulus(self, center: complex, radius: float) -> float:
        gap = abs(complex(self.c) * center + complex(self.d))
        slack = abs(complex(self.c)) * radius
        if gap - slack <= 0:
            return math.inf
        det = abs(complex(self.a * self.d - self.b * self.c))
        return det * radius / (gap * (gap - slack))

    def conjugate(self) -> "MobiusMap":
        return MobiusMap(
            a=self.a.conjugate(), b=self.b.conjugate(), c=self.c.conjugate(), d=self.d.conjugate()
        )


class PowerMap(_Frozen):
    """z -> z**n."""

    kind: Literal["power"] = "power"
    n: int = Field(ge=1)

    def apply(self, z: ExactComplex) -> ExactComplex:
        return z**self.n

    def numeric(self, z: Any) -> Any:
        return z**self.n

    def modulus(self, center: complex, radius: float) -> float:
        base = abs(center)
        return (base + radius) ** self.n - base**self.n

    def conjugate(self) -> "PowerMap":
        return self


ExactMap = Union[MobiusMap, PowerMap]


def _apply_chain(maps: Sequence[ExactMap], z: ExactComplex) -> ExactComplex | None:
    for m in maps:
        z = m.apply(z)
        if z is None:
            return None
    return z


def _numeric_chain(maps: Sequence[ExactMap], values: Any) -> Any:
    for m in maps:
        values = m.numeric(values)
    return values


def _chain_modulus(maps: Sequence[ExactMap], center: complex, radius: float) -> float:
    for m in maps:
        radius, center = m.modulus(center, radius), m.numeric(center)
        if not math.isfinite(radius):
            return math.inf
    return radius * (1 + 1e-9) + 1e-300


def _mobius_only(maps: Sequence[ExactMap]) -> MobiusMap | None:
    combined: MobiusMap | None = None
    for m in maps:
        if not isinstance(m, MobiusMap):
            return None
        combined = m if combined is None else m.after(combined)
    return combined


class ImageTail(_Frozen):
    """Opaque tail: the cluster is the image of `source` under `maps`."""

    kind: Literal["image"] = "image"
    source: "Cluster"
    maps: tuple[ExactMap, ...]

    @field_validator("maps")
    @classmethod
    def check_maps(cls, v: tuple) -> tuple:
        if not v:
            raise ValueError("image tail needs at least one map")
        return v

    def has_exact_terms(self) -> bool:
        return self.source.tail.has_exact_terms()

    def conjugate(self) -> "ImageTail":
        return ImageTail(source=self.source.conjugate(), maps=tuple(m.conjugate() for m in self.maps))


TailSpec = Union[GeometricTail, PowerTail, ImageTail]

Unit = Union[ExactComplex, "Cluster"]


# ---------------------------------------------------------------------------
# Clusters
# ---------------------------------------------------------------------------


class Cluster(_Frozen):
    """A closed convergent family of points.

    Depth 1: terms limit + tail(n). Depth 2: the tail generates child limits mu_n; every child
    template is a depth-1 cluster with limit 0 written in local coordinates, contributing points
    mu_n + (mu_n - limit) * rho(k).
    """

    limit: ExactComplex
    tail: TailSpec = Field(discriminator="kind")
    removed_prefix: int = Field(default=0, ge=0)
    children: tuple["Cluster", ...] = ()

    @field_validator("limit", mode="before")
    @classmethod
    def coerce_limit(cls, v: Any) -> ExactComplex:
        return _exact(v)

    @model_validator(mode="after")
    def check_structure(self) -> "Cluster":
        if isinstance(self.tail, ImageTail):
            if self.removed_prefix or self.children:
                raise ValueError("image clusters carry prefix and children in their source")
            image_limit = _apply_chain(self.tail.maps, self.tail.source.limit)
            if image_limit is None or image_limit != self.limit:
                raise ValueError("image cluster limit must be the image of the source limit")
            return self
        if self.children:
            if not self.tail.has_exact_terms():
                raise ValueError("depth-2 clusters need a tail with rational terms")
            for child in self.children:
                if child.children:
                    raise DepthOverflowError("cluster nesting deeper than 2")
                if isinstance(child.tail, ImageTail):
                    raise ValueError("child templates must use a closed-form tail")
                if not child.limit.is_zero():
                    raise ValueError("child templates are written around limit 0")
                n = child.tail.index_of(-ONE)
                if n is not None and n >= child.first_index:
                    raise ValueError("child template would generate the outer limit")
            self._check_distinct_terms()
        return self

    def _check_distinct_terms(self) -> None:
        """Leaf terms must differ from every child limit and from the other templates' terms."""
        window = range(_COINCIDENCE_WINDOW)
        for i, child in enumerate(self.children):
            for other in self.children[i + 1 :]:
                for k in window:
                    rho = child.tail.offset(child.first_index + k)
                    n = None if rho is None else other.tail.index_of(rho)
                    if n is not None and n >= other.first_index:
                        raise ValueError(f"child templates share the local term {rho}")
        for rel in window:
            mu = self.parent_term(rel)
            if mu is None:
                continue
            for child in self.children:
                for k in window:
                    rho = child.tail.offset(child.first_index + k)
                    if rho is None:
                        continue
                    leaf = mu + (mu - self.limit) * rho
                    n = self.tail.index_of(leaf - self.limit)
                    if n is not None and n >= self.first_index:
                        raise ValueError(f"leaf term {leaf} coincides with a child limit")

    # structure
    @property
    def is_image(self) -> bool:
        return isinstance(self.tail, ImageTail)

    @property
    def depth(self) -> int:
        if isinstance(self.tail, ImageTail):
            return self.tail.source.depth
        return 2 if self.children else 1

    @property
    def unit_width(self) -> int:
        """How many explicit units split_at emits per first-level index."""
        if isinstance(self.tail, ImageTail):
            return self.tail.source.unit_width
        return len(self.children) if self.children else 1

    @property
    def first_index(self) -> int:
        return self.tail.start + self.removed_prefix

    def parent_term(self, rel: int) -> ExactComplex | None:
        """Exact value of the rel-th generated first-level point (term or child limit)."""
        if isinstance(self.tail, ImageTail):
            source_value = self.tail.source.parent_term(rel)
            return None if source_value is None else _apply_chain(self.tail.maps, source_value)
        offset = self.tail.offset(self.first_index + rel)
        return None if offset is None else self.limit + offset

    def _child_radius(self) -> float:
        return max((c.tail.modulus(c.first_index) for c in self.children), default=0.0)

    def family_clusters(self, rel: int) -> list["Cluster"]:
        """Child clusters around the rel-th child limit, as depth-1 clusters."""
        if isinstance(self.tail, ImageTail):
            source = self.tail.source.family_clusters(rel)
            return [c.apply_maps(self.tail.maps) for c in source]
        if not self.children:
            raise ValueError("depth-1 clusters have no families")
        mu = self.parent_term(rel)
        scale = mu - self.limit
        return [
            Cluster(limit=mu, tail=child.tail.scaled(scale), removed_prefix=child.removed_prefix)
            for child in self.children
        ]

    def accumulation_cluster(self) -> "Cluster | None":
        """The derived set of a depth-2 cluster: child limits and the outer limit."""
        if self.depth == 1:
            return None
        if isinstance(self.tail, ImageTail):
            source = self.tail.source.accumulation_cluster()
            return Cluster(limit=self.limit, tail=ImageTail(source=source, maps=self.tail.maps))
        return Cluster(limit=self.limit, tail=self.tail, removed_prefix=self.removed_prefix)

    # membership
    def _matches(self, x: ExactComplex) -> Iterator[int]:
        """Yield the first-level unit index of every generated entry equal to x."""
        if x == self.limit:
            return
        if isinstance(self.tail, ImageTail):
            yield from self._image_matches(x)
            return
        if not self.children:
            n = self.tail.index_of(x - self.limit)
            if n is not None and n >= self.first_index:
                yield n - self.first_index
            return
        distance = _magnitude(x - self.limit)
        reach = 1.0 + self._child_radius()
        for rel in count():
            if rel > settings.MEMBERSHIP_SEARCH_LIMIT:
                raise UnsupportedSpectralShapeError("membership search did not terminate")
            if self.tail.modulus(self.first_index + rel) * reach * (1 + 1e-9) < distance:
                return
            mu = self.parent_term(rel)
            if mu == x:
                yield rel
                continue
            relative = (x - mu) / (mu - self.limit)
            for child in self.children:
                k = child.tail.index_of(relative)
                if k is not None and k >= child.first_index:
                    yield rel

    def _image_matches(self, x: ExactComplex) -> Iterator[int]:
        source: Cluster = self.tail.source
        maps = self.tail.maps
        mobius = _mobius_only(maps)
        if mobius is not None:
            inverse = mobius.inverse()
            y = inverse.apply(x)
            if y is not None:
                yield from source._matches(y)
            return
        distance = _magnitude(x - self.limit)
        centre = complex(source.limit)
        reach = 1.0 + source._child_radius()
        for rel in count():
            if rel > settings.MEMBERSHIP_SEARCH_LIMIT:
                raise UnsupportedSpectralShapeError("membership search did not terminate")
            radius = source.tail.modulus(source.first_index + rel) * reach
            if _chain_modulus(maps, centre, radius) < distance:
                return
            y = source.parent_term(rel)
            if y is None:
                continue
            image = _apply_chain(maps, y)
            if image == x:
                yield rel
                continue
            if not source.children or image is None:
                continue
            inner_distance = _magnitude(x - image)
            for child in source.children:
                for k in count(child.first_index):
                    if k - child.first_index > settings.MEMBERSHIP_SEARCH_LIMIT:
                        raise UnsupportedSpectralShapeError("membership search did not terminate")
                    step = _magnitude(y - source.limit) * child.tail.modulus(k)
                    if _chain_modulus(maps, complex(y), step) < inner_distance:
                        break
                    rho = child.tail.offset(k)
                    if rho is None:
                        continue
                    if _apply_chain(maps, y + (y - source.limit) * rho) == x:
                        yield rel

    def contains(self, x: ExactComplex) -> bool:
        return x == self.limit or next(self._matches(x), None) is not None

    def locate(self, x: ExactComplex) -> int | None:
        """First-level unit index holding x, None for the limit or absent values."""
        return next(self._matches(x), None)

    def count(self, x: ExactComplex) -> int:
        """Number of generated entries equal to x (the limit itself is not an entry)."""
        return sum(1 for _ in self._matches(x))

    def is_accumulation(self, x: ExactComplex) -> bool:
        if x == self.limit:
            return True
        derived = self.accumulation_cluster()
        return derived is not None and derived.contains(x)

    # transforms
    def apply_map(self, m: ExactMap) -> "Cluster":
        if isinstance(self.tail, ImageTail):
            maps = self.tail.maps + (m,)
            combined = _mobius_only(maps)
            source = self.tail.source
            if combined is not None and combined.is_affine:
                return source.apply_map(combined)
            image_limit = m.apply(self.limit)
            if image_limit is None:
                raise InvalidSpectralSetError("map has a pole at a cluster limit")
            return Cluster(limit=image_limit, tail=ImageTail(source=source, maps=maps))
        if isinstance(m, MobiusMap) and m.is_affine:
            a = m.a / m.d
            b = m.b / m.d
            return Cluster(
                limit=a * self.limit + b,
                tail=self.tail.scaled(a),
                removed_prefix=self.removed_prefix,
                children=self.children,
            )
        if isinstance(m, PowerMap) and self.limit.is_zero() and not self.children:
            return Cluster(limit=ZERO, tail=self.tail.powered(m.n), removed_prefix=self.removed_prefix)
        image_limit = m.apply(self.limit)
        if image_limit is None:
            raise InvalidSpectralSetError("map has a pole at a cluster limit")
        return Cluster(limit=image_limit, tail=ImageTail(source=self, maps=(m,)))

    def apply_maps(self, maps: Sequence[ExactMap]) -> "Cluster":
        cluster = self
        for m in maps:
            cluster = cluster.apply_map(m)
        return cluster

    def conjugate(self) -> "Cluster":
        if isinstance(self.tail, ImageTail):
            return Cluster(limit=self.limit.conjugate(), tail=self.tail.conjugate())
        return Cluster(
            limit=self.limit.conjugate(),
            tail=self.tail.conjugate(),
            removed_prefix=self.removed_prefix,
            children=tuple(c.conjugate() for c in self.children),
        )

    def drop_prefix(self, k: int) -> "Cluster":
        if isinstance(self.tail, ImageTail):
            return Cluster(
                limit=self.limit,
                tail=ImageTail(source=self.tail.source.drop_prefix(k), maps=self.tail.maps),
            )
        return self.model_copy(update={"removed_prefix": self.removed_prefix + k})

    def split_at(self, k: int) -> tuple[list[Unit], "Cluster"]:
        """Explicit units for first-level indices below k, and the remaining cluster."""
        units: list[Unit] = []
        for rel in range(k):
            if self.depth == 2:
                units.extend(self.family_clusters(rel))
                continue
            value = self.parent_term(rel)
            if value is None:
                raise UnsupportedSpectralShapeError("cannot split a cluster at an irrational term")
            units.append(value)
        return units, self.drop_prefix(k)

    # numerics
    def numeric_parent(self, n: int) -> np.ndarray:
        """First n generated first-level points as complex numbers."""
        if isinstance(self.tail, ImageTail):
            return _numeric_chain(self.tail.maps, self.tail.source.numeric_parent(n))
        indices = np.arange(self.first_index, self.first_index + n)
        return complex(self.limit) + self.tail.numeric(indices)

    def numeric_family(self, rel: int, n: int) -> np.ndarray:
        """First n points of each child template around the rel-th child limit."""
        if isinstance(self.tail, ImageTail):
            return _numeric_chain(self.tail.maps, self.tail.source.numeric_family(rel, n))
        if not self.children:
            return np.empty(0, dtype=complex)
        mu = complex(self.parent_term(rel))
        scale = mu - complex(self.limit)
        parts = []
        for child in self.children:
            indices = np.arange(child.first_index, child.first_index + n)
            parts.append(mu + scale * child.tail.numeric(indices))
        return np.concatenate(parts)

    def iter_entries(self) -> Iterator[ExactComplex | complex]:
        """Generated points in a fixed order; depth-2 clusters walk families diagonally."""
        if self.depth == 1:
            for rel in count():
                value = self.parent_term(rel)
                yield value if value is not None else complex(self.numeric_parent(rel + 1)[-1])
            return
        for level in count():
            for rel in range(level + 1):
                k = level - rel
                if k == 0:
                    yield self.parent_term(rel)
                    continue
                for family in self.family_clusters(rel):
                    value = family.parent_term(k - 1)
                    yield value if value is not None else complex(family.numeric_parent(k)[-1])


ImageTail.model_rebuild()
Cluster.model_rebuild()


# ---------------------------------------------------------------------------
# Spectrum models
# ---------------------------------------------------------------------------


class Disk(_Frozen):
    """Opaque closed disk |z - center|**2 <= radius_sq."""

    center: ExactComplex
    radius_sq: Fraction

    @field_validator("center", mode="before")
    @classmethod
    def coerce_center(cls, v: Any) -> ExactComplex:
        return _exact(v)

    @field_validator("radius_sq", mode="before")
    @classmethod
    def check_radius(cls, v: Any) -> Fraction:
        v = _to_fraction(v)
        if v <= 0:
            raise ValueError("disk radius must be positive")
        return v

    def contains(self, x: ExactComplex) -> bool:
        return (x - self.center).abs2() <= self.radius_sq


def _check_depth(clusters: Sequence[Cluster]) -> None:
    # The derived set of a finite union is the union of the derived sets.
    for c in clusters:
        derived = c.accumulation_cluster()
        if derived is not None and derived.depth != 1:
            raise DepthOverflowError(f"cluster at {c.limit} nests deeper than 2")


class SpectrumModel(_Frozen):
    points: tuple[ExactComplex, ...] = ()
    clusters: tuple[Cluster, ...] = ()
    disks: tuple[Disk, ...] = ()

    @model_validator(mode="after")
    def check_normal_form(self) -> "SpectrumModel":
        if len(set(self.points)) != len(self.points):
            raise ValueError("duplicate isolated points")
        for p in self.points:
            if any(c.contains(p) for c in self.clusters):
                raise ValueError(f"point {p} coincides with a cluster; build() normalizes this")
        _check_depth(self.clusters)
        return self

    @classmethod
    def build(
        cls,
        points: Sequence[Any] = (),
        clusters: Sequence[Cluster] = (),
        disks: Sequence[Disk] = (),
    ) -> "SpectrumModel":
        """Construct in normal form: points absorbed by clusters are dropped."""
        clusters = tuple(clusters)
        _check_depth(clusters)
        unique: dict[ExactComplex, None] = {}
        for raw in points:
            p = ExactComplex.parse(raw)
            if not any(c.contains(p) for c in clusters):
                unique[p] = None
        ordered = tuple(sorted(unique, key=ExactComplex.sort_key))
        return cls(points=ordered, clusters=clusters, disks=tuple(disks))

    @property
    def is_countable(self) -> bool:
        return not self.disks

    @property
    def is_empty(self) -> bool:
        return not (self.points or self.clusters or self.disks)

    @property
    def depth(self) -> int:
        return max((c.depth for c in self.clusters), default=0)

    def contains(self, x: Any) -> bool:
        x = ExactComplex.parse(x)
        if x in self.points:
            return True
        if any(c.contains(x) for c in self.clusters):
            return True
        return any(d.contains(x) for d in self.disks)

    def require_countable(self, what: str) -> None:
        if self.disks:
            raise UnsupportedSpectralShapeError(f"{what} needs a countable spectrum, got a disk")

    def limits(self) -> tuple[ExactComplex, ...]:
        return tuple(c.limit for c in self.clusters)


class SpectralClass(str, Enum):
    INVERTIBLE = "invertible"
    GENERALIZED_DRAZIN = "generalized_drazin"
    GZ_INVERTIBLE = "gz_invertible"
    NOT_GZ_INVERTIBLE = "not_gz_invertible"

    @property
    def rank(self) -> int:
        return {"invertible": 3, "generalized_drazin": 2, "gz_invertible": 1, "not_gz_invertible": 0}[
            self.value
        ]


class IsolatedSet(_Frozen):
    """S minus acc(S): explicit points plus per-cluster term generators."""

    points: tuple[ExactComplex, ...]
    generators: tuple[Cluster, ...]
    derived: SpectrumModel

    @property
    def is_empty(self) -> bool:
        return not self.points and not self.generators

    def contains(self, x: Any) -> bool:
        x = ExactComplex.parse(x)
        if self.derived.contains(x):
            return False
        return x in self.points or any(c.contains(x) for c in self.generators)


class SpectralSetSelection(_Frozen):
    selected_points: tuple[ExactComplex, ...] = ()
    selected_clusters: tuple[int, ...] = ()
    boundary_moves: tuple[tuple[int, int], ...] = ()

    @field_validator("selected_points", mode="before")
    @classmethod
    def coerce_points(cls, v: Any) -> tuple:
        return tuple(ExactComplex.parse(p) for p in v)

    @field_validator("selected_clusters", mode="before")
    @classmethod
    def coerce_clusters(cls, v: Any) -> tuple:
        return tuple(sorted(set(int(i) for i in v)))

    @field_validator("boundary_moves", mode="before")
    @classmethod
    def coerce_moves(cls, v: Any) -> tuple:
        return tuple(sorted(set((int(c), int(t)) for c, t in v)))

    def moved(self, cluster_index: int) -> set[int]:
        return {t for c, t in self.boundary_moves if c == cluster_index}


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def finite_set(*values: Any) -> SpectrumModel:
    return SpectrumModel.build(points=values)


def acc(S: SpectrumModel) -> SpectrumModel:
    """Derived set; the result has depth at most 1."""
    S.require_countable("acc")
    points = [c.limit for c in S.clusters if c.depth == 1]
    clusters: list[Cluster] = []
    for c in S.clusters:
        derived = c.accumulation_cluster()
        if derived is not None and derived not in clusters:
            clusters.append(derived)
    return SpectrumModel.build(points=points, clusters=clusters)


def iso(S: SpectrumModel) -> IsolatedSet:
    S.require_countable("iso")
    return IsolatedSet(points=S.points, generators=S.clusters, derived=acc(S))


def acc_acc(S: SpectrumModel) -> frozenset[ExactComplex]:
    """acc(acc(S)); finite because depth is at most 2."""
    second = acc(acc(S))
    return frozenset(second.points)


def classify_zero(S: SpectrumModel) -> SpectralClass:
    for disk in S.disks:
        if disk.center.abs2() > disk.radius_sq:
            continue
        if disk.center.is_zero():
            return SpectralClass.NOT_GZ_INVERTIBLE
        raise UnsupportedSpectralShapeError("query lies in a disk but not at its centre")
    countable = SpectrumModel(points=S.points, clusters=S.clusters)
    if not countable.contains(ZERO):
        return SpectralClass.INVERTIBLE
    derived = acc(countable)
    if not derived.contains(ZERO):
        return SpectralClass.GENERALIZED_DRAZIN
    if ZERO not in acc_acc(countable):
        return SpectralClass.GZ_INVERTIBLE
    return SpectralClass.NOT_GZ_INVERTIBLE


def classify_point(S: SpectrumModel, point: Any) -> SpectralClass:
    return classify_zero(translate(S, point))


def is_zeroloid(S: SpectrumModel) -> bool:
    if S.disks:
        return False
    derived = acc(S)
    return not derived.clusters and all(p.is_zero() for p in derived.points)


def _check_references(S: SpectrumModel, sigma: SpectralSetSelection) -> None:
    limits = set(S.limits())
    for p in sigma.selected_points:
        if p not in S.points and p not in limits:
            raise MalformedSelectionError(f"selected point {p} is not an atom of the spectrum")
    for i in sigma.selected_clusters:
        if not 0 <= i < len(S.clusters):
            raise MalformedSelectionError(f"cluster {i} does not exist")
    if len(sigma.boundary_moves) > settings.MAX_BOUNDARY_MOVES:
        raise MalformedSelectionError(
            f"{len(sigma.boundary_moves)} boundary moves exceed the cap of {settings.MAX_BOUNDARY_MOVES}"
        )
    for c, t in sigma.boundary_moves:
        if not 0 <= c < len(S.clusters) or t < 0:
            raise MalformedSelectionError(f"boundary move ({c}, {t}) references no term")


def _cluster_side(S: SpectrumModel, sigma: SpectralSetSelection, index: int, x: ExactComplex) -> bool | None:
    cluster = S.clusters[index]
    selected = index in sigma.selected_clusters
    if x == cluster.limit:
        return selected
    unit = cluster.locate(x)
    if unit is None:
        return None
    return selected != (unit in sigma.moved(index))


def is_spectral_set(S: SpectrumModel, sigma: SpectralSetSelection) -> bool:
    """Both the selection and its complement are closed."""
    S.require_countable("is_spectral_set")
    _check_references(S, sigma)
    for i, c in enumerate(S.clusters):
        if c.limit in sigma.selected_points and i not in sigma.selected_clusters:
            return False
    for i, c in enumerate(S.clusters):
        side = i in sigma.selected_clusters
        for j in range(len(S.clusters)):
            if j == i:
                continue
            other = _cluster_side(S, sigma, j, c.limit)
            if other is not None and other != side:
                return False
    return True


def selection_contains(S: SpectrumModel, sigma: SpectralSetSelection, x: Any) -> bool:
    x = ExactComplex.parse(x)
    if x in sigma.selected_points:
        return True
    if x in S.points:
        return False
    return any(_cluster_side(S, sigma, i, x) for i in range(len(S.clusters)))


def _partition(S: SpectrumModel, sigma: SpectralSetSelection) -> tuple[list[Unit], list[Unit]]:
    chosen: list[Unit] = []
    rest: list[Unit] = []
    selected_points = set(sigma.selected_points)
    for p in S.points:
        (chosen if p in selected_points else rest).append(p)
    for i, c in enumerate(S.clusters):
        moved = sigma.moved(i)
        home, away = (chosen, rest) if i in sigma.selected_clusters else (rest, chosen)
        if not moved:
            home.append(c)
            continue
        cut = max(moved) + 1
        units, remainder = c.split_at(cut)
        home.append(remainder)
        width = c.unit_width
        unit_index = 0
        for rel in range(cut):
            target = away if rel in moved else home
            target.extend(units[unit_index : unit_index + width])
            unit_index += width
    return chosen, rest


def _model_from_units(units: Sequence[Unit]) -> SpectrumModel:
    points = [u for u in units if isinstance(u, ExactComplex)]
    clusters = [u for u in units if isinstance(u, Cluster)]
    return SpectrumModel.build(points=points, clusters=clusters)


def selection_model(S: SpectrumModel, sigma: SpectralSetSelection) -> SpectrumModel:
    _check_references(S, sigma)
    return _model_from_units(_partition(S, sigma)[0])


def complement_model(S: SpectrumModel, sigma: SpectralSetSelection) -> SpectrumModel:
    _check_references(S, sigma)
    return _model_from_units(_partition(S, sigma)[1])


def map_image(S: SpectrumModel, m: ExactMap) -> SpectrumModel:
    points = []
    for p in S.points:
        image = m.apply(p)
        if image is None:
            raise InvalidSpectralSetError(f"map has a pole at {p}")
        points.append(image)
    clusters = [c.apply_map(m) for c in S.clusters]
    disks = []
    for disk in S.disks:
        if isinstance(m, MobiusMap) and m.is_affine:
            a = m.a / m.d
            disks.append(Disk(center=a * disk.center + m.b / m.d, radius_sq=a.abs2() * disk.radius_sq))
        elif isinstance(m, PowerMap) and disk.center.is_zero():
            disks.append(Disk(center=ZERO, radius_sq=disk.radius_sq**m.n))
        else:
            raise UnsupportedSpectralShapeError("disk image is not a disk")
    unique: list[Cluster] = []
    for c in clusters:
        if c not in unique:
            unique.append(c)
    return SpectrumModel.build(points=points, clusters=unique, disks=disks)


def affine_image(S: SpectrumModel, a: Any, b: Any) -> SpectrumModel:
    a, b = ExactComplex.parse(a), ExactComplex.parse(b)
    if a.is_zero():
        return SpectrumModel() if S.is_empty else finite_set(b)
    return map_image(S, MobiusMap.affine(a, b))


def translate(S: SpectrumModel, point: Any) -> SpectrumModel:
    return affine_image(S, ONE, -ExactComplex.parse(point))


def power_image(S: SpectrumModel, n: int) -> SpectrumModel:
    if n < 1:
        raise ValueError("power must be a positive integer")
    if n == 1:
        return S
    return map_image(S, PowerMap(n=n))


def conjugate(S: SpectrumModel) -> SpectrumModel:
    return SpectrumModel.build(
        points=[p.conjugate() for p in S.points],
        clusters=[c.conjugate() for c in S.clusters],
        disks=[Disk(center=d.center.conjugate(), radius_sq=d.radius_sq) for d in S.disks],
    )


def reciprocal_gz_image(S: SpectrumModel, sigma: SpectralSetSelection) -> SpectrumModel:
    """{0} together with the reciprocals of the complement of sigma."""
    S.require_countable("reciprocal_gz_image")
    if not is_spectral_set(S, sigma):
        raise InvalidSpectralSetError("selection is not a spectral set")
    rest = complement_model(S, sigma)
    if rest.contains(ZERO):
        raise InvalidSpectralSetError("0 lies outside the selected spectral set")
    chosen = selection_model(S, sigma)
    image = map_image(rest, MobiusMap.reciprocal())
    if chosen.is_empty:
        return image
    return union(finite_set(ZERO), image)


def union(S1: SpectrumModel, S2: SpectrumModel) -> SpectrumModel:
    clusters = list(S1.clusters)
    for c in S2.clusters:
        if c not in clusters:
            clusters.append(c)
    disks = list(S1.disks) + [d for d in S2.disks if d not in S1.disks]
    return SpectrumModel.build(points=S1.points + S2.points, clusters=clusters, disks=disks)


def without(S: SpectrumModel, values: Sequence[Any]) -> SpectrumModel:
    """Remove finitely many isolated values; accumulation points are left in place."""
    S.require_countable("without")
    model = S
    for raw in values:
        v = ExactComplex.parse(raw)
        if v in model.points:
            model = SpectrumModel.build(
                points=[p for p in model.points if p != v], clusters=model.clusters
            )
            continue
        if acc(model).contains(v):
            continue
        clusters: list[Cluster] = []
        points = list(model.points)
        for c in model.clusters:
            unit = c.locate(v)
            if unit is None:
                clusters.append(c)
                continue
            units, remainder = c.split_at(unit + 1)
            clusters.append(remainder)
            for u in units:
                if isinstance(u, ExactComplex):
                    if u != v:
                        points.append(u)
                else:
                    clusters.append(u)
        model = SpectrumModel.build(points=points, clusters=clusters)
        if model.contains(v) and not acc(model).contains(v):
            model = without(model, [v])
    return model
