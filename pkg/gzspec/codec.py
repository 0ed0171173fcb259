"""Conversion between JSON documents and domain objects."""

from __future__ import annotations

import json
import re
from fractions import Fraction
from pathlib import Path
from typing import Any, Type, TypeVar

import numpy as np
import structlog
from pydantic import BaseModel, TypeAdapter, ValidationError

from gzspec import operator_models as om
from gzspec import schemas
from gzspec.core.exceptions import GzSpecError, SpecParseError
from gzspec.gz_calculus import Contour
from gzspec.spectral_sets import (
    Cluster,
    Disk,
    ExactComplex,
    GeometricTail,
    ImageTail,
    MobiusMap,
    PowerMap,
    PowerTail,
    SpectralSetSelection,
    SpectrumModel,
)

logger = structlog.get_logger()

DocumentT = TypeVar("DocumentT", bound=BaseModel)

_operator_adapter = TypeAdapter(schemas.OperatorDocument)
_NUMBER = r"[0-9]+/[0-9]+|[0-9]+(?:\.[0-9]*)?|\.[0-9]+"
_COMPLEX = re.compile(
    rf"(?P<re>[+-]?(?:{_NUMBER}))?(?:(?P<sign>[+-])(?P<im>{_NUMBER})?[ij])?"
)
_IMAGINARY = re.compile(rf"(?P<im>[+-]?(?:{_NUMBER})?)[ij]")


def _wrap(what: str, exc: Exception) -> SpecParseError:
    logger.warning("Input rejected", what=what, error=str(exc))
    return SpecParseError(f"{what}: {exc}")


def read_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise _wrap(f"cannot read {path}", exc) from exc
    except json.JSONDecodeError as exc:
        raise _wrap(f"{path} is not valid JSON", exc) from exc


def load_document(path: str | Path, model: Type[DocumentT]) -> DocumentT:
    data = read_json(path)
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise _wrap(f"{path} does not match {model.__name__}", exc) from exc


def parse_point(text: str) -> ExactComplex:
    """Exact point from '1/2', '0.5+0i', '-2i' or '1/3-1/4i'."""
    compact = text.replace(" ", "")
    if not compact:
        raise SpecParseError("empty point")
    try:
        return _parse_compact(compact, text)
    except ZeroDivisionError as exc:
        raise _wrap(f"cannot parse point {text!r}", exc) from exc


def _parse_compact(compact: str, text: str) -> ExactComplex:
    match = _IMAGINARY.fullmatch(compact)
    if match:
        imaginary = match["im"]
        if imaginary in ("", "+", "-"):
            imaginary += "1"
        return ExactComplex(0, Fraction(imaginary))
    match = _COMPLEX.fullmatch(compact)
    if not match or match["re"] is None:
        raise SpecParseError(f"cannot parse point {text!r}")
    real = Fraction(match["re"])
    imaginary = Fraction(0)
    if match["sign"]:
        imaginary = Fraction(match["im"] or "1")
        if match["sign"] == "-":
            imaginary = -imaginary
    return ExactComplex(real, imaginary)


# Spectra


def _scalar(pair: Any) -> ExactComplex:
    return ExactComplex.parse(pair)


def _map_from_document(doc: Any) -> Any:
    if isinstance(doc, schemas.PowerMapDocument):
        return PowerMap(n=doc.n)
    return MobiusMap(a=_scalar(doc.a), b=_scalar(doc.b), c=_scalar(doc.c), d=_scalar(doc.d))


def _map_to_document(m: Any) -> Any:
    if isinstance(m, PowerMap):
        return schemas.PowerMapDocument(n=m.n)
    return schemas.MobiusMapDocument(
        a=m.a.to_json(), b=m.b.to_json(), c=m.c.to_json(), d=m.d.to_json()
    )


def cluster_from_document(doc: schemas.ClusterDocument) -> Cluster:
    tail_doc = doc.tail
    if isinstance(tail_doc, schemas.GeometricTailDocument):
        tail: Any = GeometricTail(base=tail_doc.base, ratio=tail_doc.ratio)
    elif isinstance(tail_doc, schemas.PowerTailDocument):
        tail = PowerTail(scale=tail_doc.scale, exponent=tail_doc.exponent)
    else:
        tail = ImageTail(
            source=cluster_from_document(tail_doc.source),
            maps=tuple(_map_from_document(m) for m in tail_doc.maps),
        )
    return Cluster(
        limit=doc.limit,
        tail=tail,
        removed_prefix=doc.removed_prefix,
        children=tuple(cluster_from_document(c) for c in doc.children),
    )


def cluster_to_document(c: Cluster) -> schemas.ClusterDocument:
    tail = c.tail
    if isinstance(tail, GeometricTail):
        tail_doc: Any = schemas.GeometricTailDocument(base=tail.base.to_json(), ratio=tail.ratio.to_json())
    elif isinstance(tail, PowerTail):
        tail_doc = schemas.PowerTailDocument(scale=tail.scale.to_json(), exponent=str(tail.exponent))
    else:
        tail_doc = schemas.ImageTailDocument(
            source=cluster_to_document(tail.source), maps=[_map_to_document(m) for m in tail.maps]
        )
    return schemas.ClusterDocument(
        limit=c.limit.to_json(),
        tail=tail_doc,
        removed_prefix=c.removed_prefix,
        children=[cluster_to_document(child) for child in c.children],
    )


def spectrum_from_document(doc: schemas.SpectrumDocument) -> SpectrumModel:
    try:
        return SpectrumModel.build(
            points=[_scalar(p) for p in doc.points],
            clusters=[cluster_from_document(c) for c in doc.clusters],
            disks=[Disk(center=d.center, radius_sq=d.radius_sq) for d in doc.disks],
        )
    except ValidationError as exc:
        raise _wrap("invalid spectrum", exc) from exc


def spectrum_to_document(S: SpectrumModel) -> schemas.SpectrumDocument:
    return schemas.SpectrumDocument(
        points=[p.to_json() for p in S.points],
        clusters=[cluster_to_document(c) for c in S.clusters],
        disks=[
            schemas.DiskDocument(center=d.center.to_json(), radius_sq=str(d.radius_sq)) for d in S.disks
        ],
    )


def selection_from_document(doc: schemas.SelectionDocument) -> SpectralSetSelection:
    return SpectralSetSelection(
        selected_points=doc.selected_points,
        selected_clusters=doc.selected_clusters,
        boundary_moves=doc.boundary_moves,
    )


def selection_to_document(sigma: SpectralSetSelection) -> schemas.SelectionDocument:
    return schemas.SelectionDocument(
        selected_points=[p.to_json() for p in sigma.selected_points],
        selected_clusters=list(sigma.selected_clusters),
        boundary_moves=[list(move) for move in sigma.boundary_moves],
    )


def load_selection(path: str | Path) -> SpectralSetSelection:
    doc = load_document(path, schemas.SelectionDocument)
    try:
        return selection_from_document(doc)
    except (ValidationError, ValueError, ZeroDivisionError) as exc:
        raise _wrap(f"{path} is not a valid selection", exc) from exc


# Matrices


def matrix_from_document(doc: schemas.MatrixDocument) -> np.ndarray:
    values = np.array([complex(re, im) for re, im in doc.entries], dtype=complex)
    return values.reshape(doc.rows, doc.cols)


def matrix_to_document(A: np.ndarray) -> schemas.MatrixDocument:
    A = np.asarray(A, dtype=complex)
    rows, cols = A.shape
    entries = [[float(z.real), float(z.imag)] for z in A.reshape(-1)]
    return schemas.MatrixDocument(rows=rows, cols=cols, entries=entries)


def contour_from_document(doc: schemas.ContourDocument) -> Contour:
    fields: dict[str, Any] = {"center": doc.center, "radius": doc.radius}
    if doc.initial_nodes is not None:
        fields["initial_nodes"] = doc.initial_nodes
    return Contour(**fields)


# Operators


def _entry_map_from_document(doc: Any) -> Any:
    if isinstance(doc, schemas.GzEntryMapDocument):
        return om.GzEntryMap(selection=selection_from_document(doc.selection))
    if isinstance(doc, schemas.PowerEntryMapDocument):
        return om.PowerEntryMap(n=doc.n)
    return om.AffineEntryMap(a=doc.a, b=doc.b)


def _entry_map_to_document(m: Any) -> Any:
    if isinstance(m, om.GzEntryMap):
        return schemas.GzEntryMapDocument(selection=selection_to_document(m.selection))
    if isinstance(m, om.PowerEntryMap):
        return schemas.PowerEntryMapDocument(n=m.n)
    return schemas.AffineEntryMapDocument(a=m.a.to_json(), b=m.b.to_json())


def _diagonal_from_document(doc: schemas.DiagonalOperatorDocument) -> om.Diagonal:
    return om.Diagonal(
        points=tuple(om.PointEntry(value=p.value, multiplicity=p.multiplicity) for p in doc.points),
        clusters=tuple(cluster_from_document(c) for c in doc.clusters),
        entry_maps=tuple(_entry_map_from_document(m) for m in doc.entry_maps),
    )


def _weights_from_document(doc: Any) -> Any:
    if isinstance(doc, schemas.ConstantWeightsDocument):
        return om.ConstantWeights(value=doc.value, prefix=doc.prefix)
    decay = doc.decay
    if isinstance(decay, schemas.PowerTailDocument):
        decay = PowerTail(scale=decay.scale, exponent=decay.exponent)
    elif isinstance(decay, schemas.GeometricTailDocument):
        decay = GeometricTail(base=decay.base, ratio=decay.ratio)
    return om.NullWeights(decay=decay)


def _model_from_document(doc: Any) -> Any:
    if isinstance(doc, schemas.MatrixOperatorDocument):
        return om.FiniteMatrix(matrix=matrix_from_document(doc))
    if isinstance(doc, schemas.DiagonalOperatorDocument):
        return _diagonal_from_document(doc)
    if isinstance(doc, schemas.ShiftOperatorDocument):
        return om.WeightedShift(
            direction=doc.direction, weights=_weights_from_document(doc.weights), power=doc.power
        )
    if isinstance(doc, schemas.DirectSumOperatorDocument):
        return om.DirectSum(summands=tuple(_model_from_document(s) for s in doc.summands))
    if isinstance(doc, schemas.AffineOperatorDocument):
        return om.Affine(model=_model_from_document(doc.model), a=doc.a, b=doc.b)
    return om.DiagonalPerturbation(
        base=_diagonal_from_document(doc.base),
        support=[(entry.index, entry.value) for entry in doc.support],
    )


def operator_from_data(data: Any, what: str = "operator spec") -> tuple[str | None, Any]:
    """Validate a raw operator document; returns (id, model)."""
    try:
        doc = _operator_adapter.validate_python(data)
        return doc.id, _model_from_document(doc)
    except GzSpecError:
        raise
    except (ValidationError, ValueError, ZeroDivisionError) as exc:
        raise _wrap(f"{what} is invalid", exc) from exc


def load_operator(path: str | Path) -> tuple[str, Any]:
    operator_id, model = operator_from_data(read_json(path), what=str(path))
    logger.info("Operator loaded", path=str(path), variant=model.variant)
    return operator_id or Path(path).stem, model


def operator_to_data(m: Any) -> dict[str, Any]:
    """Plain JSON for a model; inverse diagonal models are written this way."""
    if isinstance(m, om.FiniteMatrix):
        doc: Any = schemas.MatrixOperatorDocument(**matrix_to_document(m.matrix).model_dump())
    elif isinstance(m, om.Diagonal):
        doc = schemas.DiagonalOperatorDocument(
            points=[
                schemas.PointEntryDocument(value=p.value.to_json(), multiplicity=p.multiplicity)
                for p in m.points
            ],
            clusters=[cluster_to_document(c) for c in m.clusters],
            entry_maps=[_entry_map_to_document(e) for e in m.entry_maps],
        )
    elif isinstance(m, om.WeightedShift):
        weights = m.weights
        if isinstance(weights, om.ConstantWeights):
            weights_doc: Any = schemas.ConstantWeightsDocument(
                value=str(weights.value), prefix=[str(w) for w in weights.prefix]
            )
        elif isinstance(weights.decay, PowerTail):
            weights_doc = schemas.NullWeightsDocument(
                decay=schemas.PowerTailDocument(
                    scale=weights.decay.scale.to_json(), exponent=str(weights.decay.exponent)
                )
            )
        else:
            weights_doc = schemas.NullWeightsDocument(
                decay=schemas.GeometricTailDocument(
                    base=weights.decay.base.to_json(), ratio=weights.decay.ratio.to_json()
                )
            )
        doc = schemas.ShiftOperatorDocument(direction=m.direction, weights=weights_doc, power=m.power)
    elif isinstance(m, om.DirectSum):
        return {"variant": "direct_sum", "summands": [operator_to_data(s) for s in m.summands]}
    elif isinstance(m, om.Affine):
        return {
            "variant": "affine",
            "model": operator_to_data(m.model),
            "a": m.a.to_json(),
            "b": m.b.to_json(),
        }
    else:
        return {
            "variant": "perturbation",
            "base": operator_to_data(m.base),
            "support": [{"index": k, "value": v.to_json()} for k, v in m.support],
        }
    return doc.model_dump(mode="json", exclude={"id"}, by_alias=True)
