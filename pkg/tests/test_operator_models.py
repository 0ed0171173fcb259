from fractions import Fraction

import numpy as np
import pytest
from pydantic import ValidationError

from gzspec import linalg_kernel as lk
from gzspec import operator_models as om
from gzspec import spectral_sets as ss
from gzspec.core.exceptions import (
    InvalidSpectralSetError,
    NotSemiFredholmError,
    UnsupportedSpectralShapeError,
)
from gzspec.operator_models import (
    Affine,
    ConstantWeights,
    Diagonal,
    DirectSum,
    FiniteMatrix,
    NullWeights,
    PointEntry,
    Tier,
    WeightedShift,
)
from gzspec.spectral_sets import ExactComplex, SpectralSetSelection


def q(p, r=1):
    return ExactComplex(Fraction(p, r))


@pytest.fixture
def diag_harmonic(harmonic_cluster):
    return Diagonal(clusters=(harmonic_cluster,))


@pytest.fixture
def left_shift():
    return WeightedShift(direction="left", weights=ConstantWeights(value=1))


@pytest.fixture
def right_shift():
    return WeightedShift(direction="right", weights=ConstantWeights(value=1))


@pytest.fixture
def quasinilpotent():
    return WeightedShift(direction="right", weights=NullWeights(decay="1/n"))


@pytest.fixture
def tail_from_three():
    return SpectralSetSelection(selected_clusters=[0], boundary_moves=[(0, 0), (0, 1)])


class TestVariants:
    def test_diagonal_needs_entries(self):
        with pytest.raises(ValidationError):
            Diagonal()

    def test_multiplicity_must_be_positive(self):
        with pytest.raises(ValidationError):
            PointEntry(value="2", multiplicity=0)

    def test_shift_weights_must_be_positive(self):
        with pytest.raises(ValidationError):
            ConstantWeights(value="-1")
        with pytest.raises(ValidationError):
            NullWeights(decay="2^-n")

    def test_null_weight_decay(self):
        weights = NullWeights(decay="1/n^2")
        assert weights.weight(0) == 1
        assert weights.weight(1) == pytest.approx(0.25)

    def test_affine_needs_nonzero_coefficient(self, diag_harmonic):
        with pytest.raises(ValidationError):
            Affine(model=diag_harmonic, a=0)

    def test_matrix_must_be_square(self):
        with pytest.raises(ValidationError):
            FiniteMatrix(matrix=np.ones((2, 3)))

    def test_matrix_equality(self):
        assert FiniteMatrix(matrix=np.eye(2)) == FiniteMatrix(matrix=[[1, 0], [0, 1]])
        assert not FiniteMatrix(matrix=np.eye(2)) == FiniteMatrix(matrix=2 * np.eye(2))

    def test_perturbation_support_in_range(self):
        with pytest.raises(ValidationError):
            om.DiagonalPerturbation(base=Diagonal(points=[PointEntry(value="2")]), support={3: "1"})


class TestEntries:
    def test_finite_multiplicities_come_first(self):
        d = Diagonal(points=[PointEntry(value="2", multiplicity=2), PointEntry(value="0")])
        assert om.leading_entries(d, 5) == [2, 2, 0]
        assert om.entry_count(d) == 3
        assert om.full_size(d) == 3

    def test_streams_interleave(self, harmonic_cluster):
        d = Diagonal(points=[PointEntry(value="5", multiplicity=None)], clusters=(harmonic_cluster,))
        assert om.leading_entries(d, 4) == [5, 1, 5, q(1, 2)]
        assert om.entry_count(d) is None


class TestSpectrum:
    def test_diagonal(self, diag_harmonic, harmonic):
        assert om.spectrum(diag_harmonic) == harmonic

    def test_matrix(self, cfg):
        S = om.spectrum(FiniteMatrix(matrix=np.diag([0.0, 0.5, 0.5])), cfg)
        assert S.points == (ss.ZERO, q(1, 2))

    def test_constant_shift_is_a_disk(self, left_shift):
        S = om.spectrum(left_shift)
        assert S.disks[0].radius_sq == 1
        assert S.contains(q(1, 2))

    def test_null_shift(self, quasinilpotent):
        assert om.spectrum(quasinilpotent) == ss.finite_set(0)

    def test_affine_and_direct_sum(self, diag_harmonic):
        m = DirectSum(
            summands=(Affine(model=diag_harmonic, a=1, b=1), FiniteMatrix(matrix=np.array([[7.0]])))
        )
        S = om.spectrum(m)
        assert S.contains(q(3, 2))
        assert S.contains(7)
        assert not S.contains(q(1, 2))

    def test_power(self, diag_harmonic, harmonic):
        assert om.spectrum(om.power_model(diag_harmonic, 2)) == ss.power_image(harmonic, 2)


class TestPointData:
    def test_diagonal_term(self, diag_harmonic):
        data = om.point_data(diag_harmonic, "1/2")
        assert (data.alpha, data.beta, data.isolated, data.in_spectrum) == (1, 1, True, True)
        assert om.index(diag_harmonic, "1/2") == 0

    def test_diagonal_limit_has_no_closed_range(self, diag_harmonic):
        assert not om.point_data(diag_harmonic, 0).closed_range
        with pytest.raises(NotSemiFredholmError):
            om.index(diag_harmonic, 0)

    def test_infinite_multiplicity_on_both_sides(self, harmonic_cluster):
        d = Diagonal(points=[PointEntry(value="5", multiplicity=None)], clusters=(harmonic_cluster,))
        assert om.point_data(d, 5).alpha is None
        with pytest.raises(NotSemiFredholmError):
            om.index(d, 5)

    def test_shift_indices(self, left_shift, right_shift):
        assert om.index(left_shift, 0) == 1
        assert om.index(right_shift, 0) == -1
        assert om.index(left_shift, 2) == 0
        assert om.index(om.power_model(left_shift, 3), 0) == 3
        assert om.index(DirectSum(summands=(left_shift, right_shift)), 0) == 0
        assert om.index(om.adjoint_model(left_shift), "1/2") == -1

    def test_shift_boundary(self, left_shift):
        with pytest.raises(UnsupportedSpectralShapeError):
            om.point_data(left_shift, 1)

    def test_null_shifts_have_no_closed_range(self, quasinilpotent):
        left = WeightedShift(direction="left", weights=NullWeights(decay="1/n"))
        assert om.point_data(left, 0).alpha == 1
        for m in (left, quasinilpotent):
            with pytest.raises(NotSemiFredholmError):
                om.index(m, 0)

    def test_affine_translates_the_query(self, diag_harmonic):
        assert om.point_data(Affine(model=diag_harmonic, a=1, b=1), "3/2").alpha == 1

    def test_matrix(self, cfg):
        data = om.point_data(FiniteMatrix(matrix=np.diag([0.0, 1.0])), 0, cfg)
        assert (data.alpha, data.beta) == (1, 1)

    def test_matrix_agrees_with_its_spectrum(self, cfg):
        m = FiniteMatrix(matrix=np.diag([1e-4, 1.0]))
        S = om.spectrum(m, cfg)
        for x in (0, "1/10000", 1, 2):
            assert om.point_data(m, x, cfg).in_spectrum == S.contains(x)
        assert om.point_data(m, 0, cfg).alpha == 0
        assert om.point_data(m, "1/10000", cfg).alpha == 1

    def test_matrix_counts_geometric_multiplicity(self, jordan2, cfg):
        m = FiniteMatrix(matrix=lk.direct_sum(jordan2, np.array([[3.0]])))
        data = om.point_data(m, 0, cfg)
        assert (data.alpha, data.in_spectrum, data.isolated) == (1, True, True)


class TestClassify:
    def test_diagonal(self, diag_harmonic):
        assert om.classify(diag_harmonic, 0).tier == Tier.GZ_INVERTIBLE
        tag = om.classify(diag_harmonic, "1/2")
        assert tag.tier == Tier.DRAZIN and tag.browder
        resolvent = om.classify(diag_harmonic, 2)
        assert resolvent.tier == Tier.INVERTIBLE and resolvent.browder

    def test_double_accumulation(self, double_harmonic):
        d = Diagonal(clusters=double_harmonic.clusters)
        tag = om.classify(d, 0)
        assert tag.tier == Tier.NONE
        assert not tag.is_gz
        assert (tag.left_gz, tag.right_gz) == (False, False)

    def test_infinite_eigenvalue_is_not_browder(self, harmonic_cluster):
        d = Diagonal(points=[PointEntry(value="5", multiplicity=None)], clusters=(harmonic_cluster,))
        tag = om.classify(d, 5)
        assert tag.tier == Tier.DRAZIN
        assert not tag.browder

    def test_small_matrix_eigenvalue_is_not_zero(self, cfg):
        m = FiniteMatrix(matrix=np.diag([1e-4, 1.0]))
        assert om.classify(m, 0, cfg).tier == Tier.INVERTIBLE
        assert om.spectrum(m, cfg) == ss.finite_set("1/10000", 1)

    def test_matrix(self, cfg):
        tag = om.classify(FiniteMatrix(matrix=np.diag([0.0, 1.0])), 0, cfg)
        assert tag.tier == Tier.DRAZIN and tag.browder

    def test_quasinilpotent(self, quasinilpotent):
        tag = om.classify(quasinilpotent, 0)
        assert tag.tier == Tier.GENERALIZED_DRAZIN
        assert not tag.browder
        assert tag.is_gz

    def test_one_sided(self, left_shift, right_shift):
        left = om.classify(left_shift, 0)
        assert left.tier == Tier.NONE
        assert (left.left_gz, left.right_gz) == (False, True)
        right = om.classify(right_shift, 0)
        assert (right.left_gz, right.right_gz) == (True, False)
        both = om.classify(DirectSum(summands=(left_shift, right_shift)), 0)
        assert (both.left_gz, both.right_gz) == (False, False)

    def test_inside_a_disk_off_centre(self, left_shift):
        with pytest.raises(UnsupportedSpectralShapeError):
            om.classify(left_shift, "1/2")


class TestDerivedModels:
    def test_adjoint(self, jordan2):
        assert om.adjoint_model(FiniteMatrix(matrix=jordan2)) == FiniteMatrix(matrix=jordan2.T)
        d = om.adjoint_model(Diagonal(points=[PointEntry(value=[2, 1])]))
        assert d.points[0].value == ExactComplex(2, -1)

    def test_power(self, left_shift, diag_harmonic):
        assert om.power_model(left_shift, 2).power == 2
        assert om.power_model(diag_harmonic, 1) is diag_harmonic
        scaled = om.power_model(Affine(model=diag_harmonic, a=2), 3)
        assert scaled.a == 8
        with pytest.raises(ValueError):
            om.power_model(diag_harmonic, 0)
        with pytest.raises(UnsupportedSpectralShapeError):
            om.power_model(Affine(model=left_shift, a=1, b=1), 2)

    def test_power_of_translated_diagonal(self, diag_harmonic):
        squared = om.power_model(Affine(model=diag_harmonic, a=1, b=1), 2)
        assert om.leading_entries(squared, 2) == [4, q(9, 4)]

    def test_perturb(self, diag_harmonic):
        perturbed = om.perturb(diag_harmonic, {0: "5"})
        assert om.leading_entries(perturbed, 3) == [5, q(1, 2), q(1, 3)]
        S = om.spectrum(perturbed)
        assert S.contains(5)
        assert not S.contains(1)
        assert S.contains(q(1, 2))
        assert om.classify(perturbed, 0).tier == Tier.GZ_INVERTIBLE


class TestGzInverseDiagonal:
    def test_entries(self, diag_harmonic, tail_from_three):
        inverse, certificate = om.gz_inverse_diagonal(diag_harmonic, tail_from_three)
        assert certificate.passed
        assert certificate.sampled == 32
        assert certificate.sample_bound == 32
        assert om.leading_entries(inverse, 4) == [1, 2, 0, 0]
        assert np.allclose(om.truncate(inverse, 6), np.diag([1, 2, 0, 0, 0, 0]))

    def test_spectrum(self, diag_harmonic, tail_from_three):
        inverse, _ = om.gz_inverse_diagonal(diag_harmonic, tail_from_three)
        assert om.spectrum(inverse) == ss.finite_set(0, 1, 2)

    def test_whole_cluster(self, diag_harmonic):
        inverse, certificate = om.gz_inverse_diagonal(diag_harmonic, SpectralSetSelection(selected_clusters=[0]))
        assert certificate.passed
        assert om.leading_entries(inverse, 3) == [0, 0, 0]

    def test_zero_left_out(self, diag_harmonic):
        with pytest.raises(InvalidSpectralSetError):
            om.gz_inverse_diagonal(diag_harmonic, SpectralSetSelection())

    def test_limit_without_its_cluster(self, diag_harmonic):
        with pytest.raises(InvalidSpectralSetError):
            om.gz_inverse_diagonal(diag_harmonic, SpectralSetSelection(selected_points=["0"]))

    def test_regularity_reports_the_gap(self, diag_harmonic, tail_from_three):
        _, certificate = om.gz_inverse_diagonal(diag_harmonic, tail_from_three)
        checks = {c.name: c for c in certificate.checks}
        assert checks["commutation"].passed
        assert checks["regularity"].passed
        assert checks["regularity"].detail == "unselected spectrum 0.5 from 0, 0.167 from the selected part"

    def test_sample_bound(self, diag_harmonic, tail_from_three):
        _, certificate = om.gz_inverse_diagonal(diag_harmonic, tail_from_three, samples=5)
        assert (certificate.sampled, certificate.sample_bound) == (5, 5)

    def test_unbounded_entries_fail_regularity(self):
        check = om._regularity(ss.finite_set(0, q(1, 100)), ss.finite_set(1), [ExactComplex(100)], 4)
        assert not check.passed

    def test_commutation_needs_an_entrywise_function(self):
        assert om._entrywise_function([q(1), q(2), q(1)], [q(1), q(1, 2), q(1)])
        assert not om._entrywise_function([q(1), q(2), q(1)], [q(1), q(1, 2), q(0)])


class TestTruncate:
    def test_matrix(self):
        A = np.arange(9.0).reshape(3, 3)
        assert np.array_equal(om.truncate(FiniteMatrix(matrix=A), 2), A[:2, :2])

    def test_shifts(self, left_shift, right_shift):
        assert np.array_equal(om.truncate(left_shift, 3), np.eye(3, k=1))
        assert np.array_equal(om.truncate(right_shift, 3), np.eye(3, k=-1))
        assert np.array_equal(om.truncate(om.power_model(left_shift, 2), 3), np.eye(3, k=2))

    def test_null_shift(self, quasinilpotent):
        block = om.truncate(quasinilpotent, 3)
        assert block[1, 0] == 1
        assert block[2, 1] == pytest.approx(0.5)

    def test_direct_sum_keeps_finite_summands_whole(self, diag_harmonic):
        m = DirectSum(summands=(FiniteMatrix(matrix=np.array([[7.0]])), diag_harmonic))
        assert np.allclose(om.truncate(m, 3), np.diag([7, 1, 1 / 2, 1 / 3]))

    def test_affine(self, diag_harmonic):
        assert np.allclose(om.truncate(Affine(model=diag_harmonic, a=2, b=1), 2), np.diag([3, 2]))

    def test_size_must_be_positive(self, diag_harmonic):
        with pytest.raises(ValueError):
            om.truncate(diag_harmonic, 0)

    def test_finite_models(self, left_shift, diag_harmonic):
        assert om.is_finite_model(FiniteMatrix(matrix=np.eye(2)))
        assert not om.is_finite_model(diag_harmonic)
        assert not om.is_finite_model(left_shift)
        with pytest.raises(TypeError):
            om.full_size(left_shift)
