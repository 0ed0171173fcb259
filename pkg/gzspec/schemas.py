"""JSON documents read and written by the command line.

Rationals travel as "p/q" strings, complex scalars as [re, im] pairs. Matrices are row-major
lists of [re, im] doubles.
"""

from typing import Annotated, Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Scalar = Union[str, int, float]
ComplexPair = List[Scalar]


def _check_pair(v: Any) -> Any:
    if isinstance(v, list) and len(v) != 2:
        raise ValueError("complex values are [re, im] pairs")
    return v


class Check(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    name: str
    passed: bool = Field(alias="pass")
    residual: Optional[float] = None
    detail: Optional[str] = None


# Matrices


class MatrixDocument(BaseModel):
    rows: int = Field(..., ge=1)
    cols: int = Field(..., ge=1)
    entries: List[List[float]]

    @model_validator(mode="after")
    def check_entries(self) -> "MatrixDocument":
        if len(self.entries) != self.rows * self.cols:
            raise ValueError(f"expected {self.rows * self.cols} entries, got {len(self.entries)}")
        for pair in self.entries:
            if len(pair) != 2:
                raise ValueError("matrix entries are [re, im] pairs")
        return self


class ContourDocument(BaseModel):
    center: List[float]
    radius: float = Field(..., gt=0)
    initial_nodes: Optional[int] = Field(default=None, ge=4)

    @field_validator("center")
    @classmethod
    def check_center(cls, v: List[float]) -> List[float]:
        return _check_pair(v)


# Spectra


class GeometricTailDocument(BaseModel):
    kind: Literal["geometric"] = "geometric"
    base: ComplexPair
    ratio: ComplexPair


class PowerTailDocument(BaseModel):
    kind: Literal["power"] = "power"
    scale: ComplexPair
    exponent: Scalar


class MobiusMapDocument(BaseModel):
    kind: Literal["mobius"] = "mobius"
    a: ComplexPair
    b: ComplexPair
    c: ComplexPair
    d: ComplexPair


class PowerMapDocument(BaseModel):
    kind: Literal["power"] = "power"
    n: int = Field(..., ge=1)


MapDocument = Annotated[Union[MobiusMapDocument, PowerMapDocument], Field(discriminator="kind")]


class ImageTailDocument(BaseModel):
    kind: Literal["image"] = "image"
    source: "ClusterDocument"
    maps: List[MapDocument]


TailDocument = Annotated[
    Union[GeometricTailDocument, PowerTailDocument, ImageTailDocument], Field(discriminator="kind")
]


class ClusterDocument(BaseModel):
    limit: ComplexPair
    tail: TailDocument
    removed_prefix: int = Field(default=0, ge=0)
    children: List["ClusterDocument"] = []


class DiskDocument(BaseModel):
    center: ComplexPair
    radius_sq: Scalar


class SpectrumDocument(BaseModel):
    points: List[ComplexPair] = []
    clusters: List[ClusterDocument] = []
    disks: List[DiskDocument] = []


class SelectionDocument(BaseModel):
    selected_points: List[ComplexPair] = []
    selected_clusters: List[int] = []
    boundary_moves: List[List[int]] = []

    @field_validator("boundary_moves")
    @classmethod
    def check_moves(cls, v: List[List[int]]) -> List[List[int]]:
        for move in v:
            if len(move) != 2:
                raise ValueError("boundary moves are [cluster, term] pairs")
        return v


ImageTailDocument.model_rebuild()
ClusterDocument.model_rebuild()


# Operators


class PointEntryDocument(BaseModel):
    value: ComplexPair
    multiplicity: Optional[int] = Field(default=1, ge=1)


class GzEntryMapDocument(BaseModel):
    kind: Literal["gz"] = "gz"
    selection: SelectionDocument


class PowerEntryMapDocument(BaseModel):
    kind: Literal["power"] = "power"
    n: int = Field(..., ge=1)


class AffineEntryMapDocument(BaseModel):
    kind: Literal["affine"] = "affine"
    a: ComplexPair
    b: ComplexPair


EntryMapDocument = Annotated[
    Union[GzEntryMapDocument, PowerEntryMapDocument, AffineEntryMapDocument],
    Field(discriminator="kind"),
]


class OperatorBase(BaseModel):
    id: Optional[str] = None


class MatrixOperatorDocument(OperatorBase, MatrixDocument):
    variant: Literal["matrix"] = "matrix"


class DiagonalOperatorDocument(OperatorBase):
    variant: Literal["diagonal"] = "diagonal"
    points: List[PointEntryDocument] = []
    clusters: List[ClusterDocument] = []
    entry_maps: List[EntryMapDocument] = []


class ConstantWeightsDocument(BaseModel):
    kind: Literal["constant"] = "constant"
    value: Scalar
    prefix: List[Scalar] = []


class NullWeightsDocument(BaseModel):
    kind: Literal["null"] = "null"
    decay: Union[str, PowerTailDocument, GeometricTailDocument] = "1/n"


WeightsDocument = Annotated[
    Union[ConstantWeightsDocument, NullWeightsDocument], Field(discriminator="kind")
]


class ShiftOperatorDocument(OperatorBase):
    variant: Literal["shift"] = "shift"
    direction: Literal["left", "right"]
    weights: WeightsDocument
    power: int = Field(default=1, ge=1)


class DirectSumOperatorDocument(OperatorBase):
    variant: Literal["direct_sum"] = "direct_sum"
    summands: List["OperatorDocument"]


class AffineOperatorDocument(OperatorBase):
    variant: Literal["affine"] = "affine"
    model: "OperatorDocument"
    a: ComplexPair
    b: ComplexPair = ["0", "0"]


class SupportEntryDocument(BaseModel):
    index: int = Field(..., ge=0)
    value: ComplexPair


class PerturbationOperatorDocument(OperatorBase):
    variant: Literal["perturbation"] = "perturbation"
    base: DiagonalOperatorDocument
    support: List[SupportEntryDocument]


OperatorDocument = Annotated[
    Union[
        MatrixOperatorDocument,
        DiagonalOperatorDocument,
        ShiftOperatorDocument,
        DirectSumOperatorDocument,
        AffineOperatorDocument,
        PerturbationOperatorDocument,
    ],
    Field(discriminator="variant"),
]

DirectSumOperatorDocument.model_rebuild()
AffineOperatorDocument.model_rebuild()


# Reports


class ToleranceEcho(BaseModel):
    profile: str
    rank_rtol: float
    residual_tol: float
    quadrature_tol: float


class LatticeTagResponse(BaseModel):
    tier: Literal["invertible", "drazin", "generalized_drazin", "gz_invertible", "none"]
    browder: bool
    left_gz: Optional[bool] = None
    right_gz: Optional[bool] = None


class SpectralTiers(BaseModel):
    in_spectrum: bool
    in_acc: Optional[bool] = None
    in_acc_acc: Optional[bool] = None


class PointDataResponse(BaseModel):
    alpha: Optional[int]
    beta: Optional[int]
    isolated: bool
    in_spectrum: bool
    index: Optional[str] = None


class CertificateSummary(BaseModel):
    kind: str
    commutation_residual: Optional[float] = None
    inner_residual: Optional[float] = None
    power_residual: Optional[float] = None
    core_residual: Optional[int] = None
    claimed_index: Optional[int] = None
    passed: bool
    checks: List[Check] = []
    inverse: Optional[MatrixDocument] = None
    inverse_model: Optional[Dict[str, Any]] = None
    inverse_spectrum: Optional[SpectrumDocument] = None
    sampled_entries: Optional[int] = None
    sample_bound: Optional[int] = None


class SpectralReport(BaseModel):
    command: Literal["analyze", "inverse", "verify", "truncate"]
    operator_id: str
    point: Optional[ComplexPair] = None
    classification: Optional[LatticeTagResponse] = None
    spectral_tiers: Optional[SpectralTiers] = None
    point_data: Optional[PointDataResponse] = None
    certificates: List[CertificateSummary] = []
    checks: List[Check] = []
    suites: List[str] = []
    skipped: List[str] = []
    matrix: Optional[MatrixDocument] = None
    passed: bool = True
    tool_version: str
    tolerances: ToleranceEcho
