import numpy as np
import pytest
from pydantic import ValidationError

from gzspec import linalg_kernel as lk
from gzspec.core.exceptions import ShapeMismatchError, UndefinedGammaError


def _parallel(vector, axis):
    """|<v, e_axis>| == 1 for a unit vector."""
    return abs(abs(vector[axis]) - 1.0) < 1e-12


def test_rank_and_kernel_of_diagonal(cfg):
    A = np.diag([3.0, 0.0])
    assert lk.numerical_rank(A, cfg) == 1
    kernel = lk.kernel_basis(A, cfg)
    assert kernel.dimension == 1
    assert _parallel(kernel.vectors[:, 0], 1)


def test_jordan_two_subspaces(jordan2, cfg):
    assert lk.numerical_rank(jordan2, cfg) == 1
    assert _parallel(lk.kernel_basis(jordan2, cfg).vectors[:, 0], 0)
    assert _parallel(lk.range_basis(jordan2, cfg).vectors[:, 0], 0)


def test_rank_of_a_product(cfg):
    rng = np.random.default_rng(7)
    B = rng.standard_normal((6, 4))
    C = rng.standard_normal((4, 6))
    assert lk.numerical_rank(B @ C, cfg) == 4


def test_rank_is_scale_invariant(cfg):
    A = np.diag([1.0, 1e-3, 0.0])
    assert lk.numerical_rank(A, cfg) == lk.numerical_rank(1e8 * A, cfg) == 2


@pytest.mark.parametrize(
    "matrix, expected",
    [
        (np.eye(3, k=1), 3),
        (np.diag([0.0, 1.0]), 1),
        (np.array([[2.0, 1.0], [0.0, 3.0]]), 0),
    ],
)
def test_ascent_and_descent(matrix, expected, cfg):
    assert lk.ascent(matrix, cfg) == expected
    assert lk.descent(matrix, cfg) == expected
    assert lk.ascent_descent(matrix, cfg) == (expected, expected)


@pytest.mark.parametrize(
    "matrix, expected",
    [
        (np.eye(3, k=1), 3),
        (np.array([[2.0, 1.0], [0.0, 3.0]]), 0),
        (np.diag([2.0, 0.0]), 1),
    ],
)
def test_dis(matrix, expected, cfg):
    assert lk.dis(matrix, cfg) == expected


def test_stable_kernel_dims_of_jordan_three(jordan3, cfg):
    assert lk.stable_kernel_dims(jordan3, cfg)[:4] == [1, 1, 1, 0]


def _similar(J, seed=11):
    rng = np.random.default_rng(seed)
    V = np.eye(J.shape[0]) + 0.4 * rng.standard_normal(J.shape)
    return V @ J @ np.linalg.inv(V)


def test_kernel_chain_of_a_transformed_jordan_block(cfg):
    A = _similar(lk.direct_sum(np.eye(3, k=1), np.array([[2.0]])))
    chain = lk.kernel_chain(A, cfg)
    assert chain.increments == (1, 1, 1)
    assert (chain.ascent, chain.nilpotent_dimension) == (3, 3)
    assert lk.ascent_descent(A, cfg) == (3, 3)
    assert lk.dis(A, cfg) == 3
    h0 = lk.h0_basis(A, cfg)
    assert (h0.dimension, lk.k_basis(A, cfg).dimension) == (3, 1)
    assert np.linalg.norm(np.linalg.matrix_power(A, 3) @ h0.vectors) < 1e-8 * np.linalg.norm(A) ** 3


def test_kernel_chain_of_two_equal_blocks(cfg):
    A = _similar(lk.direct_sum(np.eye(2, k=1), np.eye(2, k=1)), seed=5)
    chain = lk.kernel_chain(A, cfg)
    assert chain.increments == (2, 2)
    assert chain.kernel_of_power(1).dimension == 2
    assert lk.ascent(A, cfg) == lk.descent(A, cfg) == 2


def test_nilpotent_under_similarity(cfg):
    A = _similar(np.eye(4, k=1), seed=2)
    assert lk.ascent(A, cfg) == 4
    assert lk.kernel_chain(A, cfg).nilpotent_dimension == 4
    assert lk.k_basis(A, cfg).dimension == 0


def test_power_range_basis(jordan3, cfg):
    assert lk.power_range_basis(jordan3, 0, cfg).dimension == 3
    assert lk.power_range_basis(jordan3, 1, cfg).dimension == 2
    R2 = lk.power_range_basis(jordan3, 2, cfg)
    assert R2.dimension == 1
    assert _parallel(R2.vectors[:, 0], 0)
    with pytest.raises(ValueError):
        lk.power_range_basis(jordan3, -1, cfg)


def test_gamma(jordan2, cfg):
    assert lk.gamma(np.diag([3.0, 4.0]), cfg) == pytest.approx(3.0)
    assert lk.gamma(jordan2, cfg) == pytest.approx(1.0)
    rotation = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert lk.gamma(rotation, cfg) == pytest.approx(1.0)


def test_gamma_of_zero(cfg):
    with pytest.raises(UndefinedGammaError):
        lk.gamma(np.zeros((2, 2)), cfg)


def test_quasi_nilpotent_part_and_core(jordan2, cfg):
    A = np.diag([0.0, 0.0, 2.0])
    assert np.allclose(lk.h0_basis(A, cfg).projector(), np.diag([1, 1, 0]))
    assert np.allclose(lk.k_basis(A, cfg).projector(), np.diag([0, 0, 1]))
    assert lk.h0_basis(jordan2, cfg).dimension == 2
    assert lk.k_basis(jordan2, cfg).dimension == 0
    invertible = np.array([[2.0, 1.0], [0.0, 3.0]])
    assert lk.h0_basis(invertible, cfg).dimension == 0
    assert lk.k_basis(invertible, cfg).dimension == 2


def test_eigenvalues(jordan2):
    assert np.allclose(lk.eigenvalues(np.diag([3.0, 1.0])), [1, 3])
    assert np.allclose(lk.eigenvalues(jordan2), [0, 0])
    assert np.allclose(lk.eigenvalues(np.array([[1.0, 1.0], [0.0, 3.0]])), [1, 3])


def test_direct_sum_adjoint_and_power(jordan2, jordan3, cfg):
    assert np.array_equal(lk.direct_sum(np.array([[1.0]]), np.array([[2.0]])), np.diag([1, 2]))
    star = lk.adjoint(jordan2)
    assert np.array_equal(star, np.array([[0, 0], [1, 0]]))
    assert lk.kernel_basis(star, cfg).dimension == 2 - lk.numerical_rank(jordan2, cfg)
    assert not np.any(lk.matrix_power(jordan3, 3))


def test_intersection_and_sum():
    e = np.eye(3, dtype=complex)
    U = lk.SubspaceBasis(vectors=e[:, :2], ambient=3)
    V = lk.SubspaceBasis(vectors=e[:, 1:], ambient=3)
    meet = lk.intersection_basis(U, V)
    assert meet.dimension == 1
    assert _parallel(meet.vectors[:, 0], 1)
    assert lk.sum_basis(U, V).dimension == 3


def test_restrict_to_invariant_subspace():
    A = np.diag([1.0, 2.0, 3.0])
    basis = lk.SubspaceBasis(vectors=np.eye(3, dtype=complex)[:, 1:], ambient=3)
    assert np.allclose(lk.restrict(A, basis), np.diag([2, 3]))


def test_basis_must_be_orthonormal():
    with pytest.raises(ValidationError):
        lk.SubspaceBasis(vectors=np.array([[1.0, 1.0], [0.0, 1.0]]), ambient=2)


@pytest.mark.parametrize("data", [[1.0, 2.0], [[np.nan, 0.0], [0.0, 1.0]], np.zeros((0, 0))])
def test_as_matrix_rejects(data):
    with pytest.raises(ShapeMismatchError):
        lk.as_matrix(data)


def test_square_required():
    with pytest.raises(ShapeMismatchError):
        lk.ascent(np.ones((2, 3)))
