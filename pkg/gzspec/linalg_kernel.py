"""Tolerance-aware dense complex linear algebra.

Every rank decision goes through one relative singular-value cutoff (``rank_rtol`` times the
largest singular value), so subspace dimensions, ascent, descent and dis are scale invariant.
"""

from __future__ import annotations

from typing import Any

import numpy as np
import scipy.linalg
import structlog
from pydantic import BaseModel, ConfigDict, field_validator

from gzspec.config import ToleranceConfig, settings
from gzspec.core.exceptions import InternalInvariantError, ShapeMismatchError, UndefinedGammaError

logger = structlog.get_logger()

ORTHONORMAL_TOL = 1e-12


def default_tolerances() -> ToleranceConfig:
    return settings.tolerances()


def as_matrix(data: Any) -> np.ndarray:
    """Validate and convert to a finite, nonempty 2-D complex array."""
    A = np.asarray(data, dtype=complex)
    if A.ndim != 2 or A.shape[0] == 0 or A.shape[1] == 0:
        raise ShapeMismatchError(f"Expected a nonempty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ShapeMismatchError("Matrix entries must be finite")
    return A


def require_square(A: np.ndarray) -> int:
    if A.shape[0] != A.shape[1]:
        raise ShapeMismatchError(f"Expected a square matrix, got shape {A.shape}")
    return A.shape[0]


class SubspaceBasis(BaseModel):
    """Orthonormal columns spanning a subspace of C^ambient."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    vectors: np.ndarray
    ambient: int

    @field_validator("vectors")
    @classmethod
    def check_orthonormal(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        if v.ndim != 2:
            raise ValueError("basis must be a 2-D array")
        if v.shape[1]:
            gram = v.conj().T @ v
            if np.max(np.abs(gram - np.eye(v.shape[1]))) > ORTHONORMAL_TOL * max(1, v.shape[0]):
                raise ValueError("basis columns are not orthonormal")
        return v

    @classmethod
    def zero(cls, n: int) -> "SubspaceBasis":
        return cls(vectors=np.zeros((n, 0), dtype=complex), ambient=n)

    @classmethod
    def whole(cls, n: int) -> "SubspaceBasis":
        return cls(vectors=np.eye(n, dtype=complex), ambient=n)

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    @property
    def codimension(self) -> int:
        return self.ambient - self.dimension

    def projector(self) -> np.ndarray:
        return self.vectors @ self.vectors.conj().T


def _svd(A: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return scipy.linalg.svd(A, full_matrices=True, lapack_driver="gesvd")


def _cutoff_rank(s: np.ndarray, cfg: ToleranceConfig) -> int:
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > cfg.rank_rtol * s[0]))


def singular_values(A: np.ndarray) -> np.ndarray:
    return scipy.linalg.svdvals(A)


def numerical_rank(A: np.ndarray, cfg: ToleranceConfig | None = None) -> int:
    cfg = cfg or default_tolerances()
    A = as_matrix(A)
    return _cutoff_rank(singular_values(A), cfg)


def kernel_basis(A: np.ndarray, cfg: ToleranceConfig | None = None) -> SubspaceBasis:
    cfg = cfg or default_tolerances()
    A = as_matrix(A)
    _, s, vh = _svd(A)
    r = _cutoff_rank(s, cfg)
    return SubspaceBasis(vectors=vh[r:].conj().T, ambient=A.shape[1])


def range_basis(A: np.ndarray, cfg: ToleranceConfig | None = None) -> SubspaceBasis:
    cfg = cfg or default_tolerances()
    A = as_matrix(A)
    u, s, _ = _svd(A)
    r = _cutoff_rank(s, cfg)
    return SubspaceBasis(vectors=u[:, :r], ambient=A.shape[0])


def span(vectors: np.ndarray, ambient: int, cfg: ToleranceConfig | None = None) -> SubspaceBasis:
    """Orthonormal basis for the column span of an arbitrary spanning set."""
    if vectors.size == 0 or vectors.shape[1] == 0:
        return SubspaceBasis.zero(ambient)
    return range_basis(vectors, cfg)


def sum_basis(U: SubspaceBasis, V: SubspaceBasis, cfg: ToleranceConfig | None = None) -> SubspaceBasis:
    if U.ambient != V.ambient:
        raise ShapeMismatchError("subspaces live in different spaces")
    return span(np.hstack([U.vectors, V.vectors]), U.ambient, cfg)


def intersection_basis(
    U: SubspaceBasis, V: SubspaceBasis, cfg: ToleranceConfig | None = None
) -> SubspaceBasis:
    """U ∩ V from the null space of [U, -V]; principal angles below the cutoff count as shared."""
    if U.ambient != V.ambient:
        raise ShapeMismatchError("subspaces live in different spaces")
    if U.dimension == 0 or V.dimension == 0:
        return SubspaceBasis.zero(U.ambient)
    stacked = np.hstack([U.vectors, -V.vectors])
    coefficients = kernel_basis(stacked, cfg).vectors
    return span(U.vectors @ coefficients[: U.dimension], U.ambient, cfg)


def matrix_power(A: np.ndarray, n: int) -> np.ndarray:
    A = as_matrix(A)
    require_square(A)
    if n < 0:
        raise ValueError("matrix_power needs a nonnegative exponent")
    return np.linalg.matrix_power(A, n)


class KernelChain(BaseModel):
    """Staircase form of A: Q^H A Q is block upper triangular with a nilpotent leading block.

    ``increments[k]`` is dim N(A^(k+1)) - dim N(A^k); the leading ``sum(increments[:k])``
    columns of ``basis`` span N(A^k). Every rank decision is taken against ``rank_rtol``
    times the norm of A itself, so no power of A is ever formed.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    increments: tuple[int, ...]
    basis: np.ndarray

    @property
    def ascent(self) -> int:
        return len(self.increments)

    @property
    def nilpotent_dimension(self) -> int:
        return sum(self.increments)

    def kernel_dimension(self, k: int) -> int:
        return sum(self.increments[:k])

    def kernel_of_power(self, k: int) -> SubspaceBasis:
        n = self.basis.shape[0]
        return SubspaceBasis(vectors=self.basis[:, : self.kernel_dimension(k)], ambient=n)

    def complement_of_power_kernel(self, k: int) -> SubspaceBasis:
        n = self.basis.shape[0]
        return SubspaceBasis(vectors=self.basis[:, self.kernel_dimension(k) :], ambient=n)


def kernel_chain(A: np.ndarray, cfg: ToleranceConfig | None = None) -> KernelChain:
    cfg = cfg or default_tolerances()
    A = as_matrix(A)
    n = require_square(A)
    cutoff = cfg.rank_rtol * norm(A)
    Q = np.eye(n, dtype=complex)
    block = A
    offset = 0
    increments: list[int] = []
    while block.shape[0]:
        _, s, vh = _svd(block)
        rank = int(np.sum(s > cutoff))
        d = block.shape[1] - rank
        if d == 0:
            break
        # kernel directions first, then the rest of the trailing block
        V = np.hstack([vh[rank:].conj().T, vh[:rank].conj().T])
        Q[:, offset:] = Q[:, offset:] @ V
        block = (V.conj().T @ block @ V)[d:, d:]
        offset += d
        increments.append(d)
    logger.debug("Kernel chain", increments=increments)
    return KernelChain(increments=tuple(increments), basis=Q)


def ascent(A: np.ndarray, cfg: ToleranceConfig | None = None) -> int:
    return kernel_chain(A, cfg).ascent


def descent(A: np.ndarray, cfg: ToleranceConfig | None = None) -> int:
    """Range chain of A read off the kernel chain of A^H, since rank(A^k) = rank((A^H)^k)."""
    return kernel_chain(adjoint(as_matrix(A)), cfg).ascent


def ascent_descent(A: np.ndarray, cfg: ToleranceConfig | None = None) -> tuple[int, int]:
    p, q = ascent(A, cfg), descent(A, cfg)
    if p != q:
        raise InternalInvariantError(f"ascent {p} differs from descent {q} on a square matrix")
    return p, q


def power_range_basis(A: np.ndarray, k: int, cfg: ToleranceConfig | None = None) -> SubspaceBasis:
    """R(A^k) as the orthogonal complement of N((A^H)^k)."""
    if k < 0:
        raise ValueError("power_range_basis needs a nonnegative exponent")
    return kernel_chain(adjoint(as_matrix(A)), cfg).complement_of_power_kernel(k)


def stable_kernel_dims(A: np.ndarray, cfg: ToleranceConfig | None = None) -> list[int]:
    """k_n = dim(N(A) ∩ R(A^n)) for n = 0 .. size + 1."""
    cfg = cfg or default_tolerances()
    A = as_matrix(A)
    n = require_square(A)
    kernel = kernel_basis(A, cfg)
    ranges = kernel_chain(adjoint(A), cfg)
    return [
        intersection_basis(kernel, ranges.complement_of_power_kernel(k), cfg).dimension for k in range(n + 2)
    ]


def dis(A: np.ndarray, cfg: ToleranceConfig | None = None) -> int:
    """Degree of stable iteration: first m after which k_n stops changing."""
    dims = stable_kernel_dims(A, cfg)
    m = len(dims) - 1
    while m > 0 and dims[m - 1] == dims[-1]:
        m -= 1
    logger.debug("Stable iteration degree", dims=dims, dis=m)
    return m


def gamma(A: np.ndarray, cfg: ToleranceConfig | None = None) -> float:
    """Reduced minimal modulus: the smallest nonzero singular value."""
    cfg = cfg or default_tolerances()
    A = as_matrix(A)
    s = singular_values(A)
    r = _cutoff_rank(s, cfg)
    if r == 0:
        raise UndefinedGammaError("gamma is undefined for the zero operator")
    return float(s[r - 1])


def h0_basis(A: np.ndarray, cfg: ToleranceConfig | None = None) -> SubspaceBasis:
    """Quasi-nilpotent part; N(A^p) with p the ascent."""
    chain = kernel_chain(A, cfg)
    return chain.kernel_of_power(chain.ascent)


def k_basis(A: np.ndarray, cfg: ToleranceConfig | None = None) -> SubspaceBasis:
    """Analytic core; R(A^p) with p the ascent."""
    chain = kernel_chain(adjoint(as_matrix(A)), cfg)
    return chain.complement_of_power_kernel(chain.ascent)


def eigenvalues(A: np.ndarray) -> np.ndarray:
    A = as_matrix(A)
    require_square(A)
    values = scipy.linalg.eigvals(A)
    return values[np.lexsort((values.imag, values.real))]


def direct_sum(*blocks: np.ndarray) -> np.ndarray:
    if not blocks:
        raise ShapeMismatchError("direct_sum needs at least one block")
    return scipy.linalg.block_diag(*(as_matrix(b) for b in blocks)).astype(complex)


def adjoint(A: np.ndarray) -> np.ndarray:
    return as_matrix(A).conj().T


def restrict(A: np.ndarray, basis: SubspaceBasis) -> np.ndarray:
    """Compression U^H A U; the restriction when the subspace is invariant."""
    A = as_matrix(A)
    if basis.ambient != A.shape[1]:
        raise ShapeMismatchError("basis does not match the matrix")
    return basis.vectors.conj().T @ A @ basis.vectors


def norm(A: np.ndarray) -> float:
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))
