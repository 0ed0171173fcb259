import numpy as np
import pytest

from gzspec import operator_models as om
from gzspec import suites
from gzspec.core.exceptions import ConditioningError, SpecParseError
from gzspec.operator_models import ConstantWeights, Diagonal, DirectSum, FiniteMatrix, WeightedShift
from gzspec.suites import SuiteContext


@pytest.fixture
def context(cfg):
    def make(model):
        return SuiteContext(model=model, cfg=cfg)

    return make


@pytest.fixture
def shifts():
    return DirectSum(
        summands=(
            WeightedShift(direction="left", weights=ConstantWeights(value=1)),
            WeightedShift(direction="right", weights=ConstantWeights(value=1)),
        )
    )


def _names(outcome):
    return [c.name for c in outcome.checks]


def test_drazin_on_nilpotent_matrix(context, jordan3):
    outcome = suites.drazin_suite(context(FiniteMatrix(matrix=jordan3)))
    assert not outcome.skipped
    assert all(c.passed for c in outcome.checks)
    assert all(name.startswith("drazin.") for name in _names(outcome))
    assert "drazin.regularity" in _names(outcome)


def test_drazin_needs_a_finite_model(context, shifts):
    outcome = suites.drazin_suite(context(shifts))
    assert outcome.skipped
    assert outcome.reason


def test_gz_on_matrix(context):
    outcome = suites.gz_suite(context(FiniteMatrix(matrix=np.diag([2.0, 0.0]))))
    assert outcome.checks
    assert all(c.passed for c in outcome.checks)
    assert all(name.startswith("gz.zero.") for name in _names(outcome))


def test_gz_extends_the_selection(context):
    outcome = suites.gz_suite(context(FiniteMatrix(matrix=np.diag([3.0, 1.0, 0.0]))))
    assert any(name.startswith("gz.extended.") for name in _names(outcome))
    assert all(c.passed for c in outcome.checks)


def test_gz_on_diagonal(context, harmonic_cluster):
    outcome = suites.gz_suite(context(Diagonal(clusters=(harmonic_cluster,))))
    assert "gz.truncation_agreement" in _names(outcome)
    assert all(c.passed for c in outcome.checks)


def test_gz_skips_double_accumulation(context, double_harmonic):
    outcome = suites.gz_suite(context(Diagonal(clusters=double_harmonic.clusters)))
    assert outcome.skipped


def test_splits_and_punctured(context):
    model = FiniteMatrix(matrix=np.diag([2.0, 0.0]))
    splits = suites.splits_suite(context(model))
    assert all(c.passed for c in splits.checks)
    assert "splits.multiplicative_left" in _names(splits)
    punctured = suites.punctured_suite(context(model))
    assert len(punctured.checks) == 8
    assert all(c.passed for c in punctured.checks)


def test_punctured_skips_nilpotent(context, jordan3):
    assert suites.punctured_suite(context(FiniteMatrix(matrix=jordan3))).skipped


def test_index_laws_on_shifts(context, shifts):
    outcome = suites.index_suite(context(shifts))
    names = _names(outcome)
    assert "index.direct_sum" in names
    assert "index.summand_0.power_3" in names
    assert "index.zeroloid_direct_sum" in names
    assert all(c.passed for c in outcome.checks)


def test_index_skips_without_closed_range(context, harmonic_cluster):
    assert suites.index_suite(context(Diagonal(clusters=(harmonic_cluster,)))).skipped


def test_perturbation_is_seeded(context, harmonic_cluster):
    model = Diagonal(clusters=(harmonic_cluster,))
    first = suites.perturbation_suite(context(model))
    second = suites.perturbation_suite(context(model))
    assert len(first.checks) == suites.PERTURBATION_EDITS
    assert first == second
    assert all(c.passed for c in first.checks)


def test_perturbation_needs_a_diagonal(context, jordan3):
    assert suites.perturbation_suite(context(FiniteMatrix(matrix=jordan3))).skipped


def test_run_all_in_name_order(context, jordan3):
    outcomes = suites.run_suites("all", context(FiniteMatrix(matrix=jordan3)))
    assert [o.name for o in outcomes] == sorted(suites.SUITES)
    skipped = {o.name for o in outcomes if o.skipped}
    assert skipped == {"perturbation", "punctured"}
    assert all(c.passed for o in outcomes for c in o.checks)


def test_run_all_serially_on_ci(context, jordan3, monkeypatch):
    monkeypatch.setenv("CI", "1")
    outcomes = suites.run_suites("all", context(FiniteMatrix(matrix=jordan3)))
    assert len(outcomes) == len(suites.SUITES)


def test_unknown_suite(context, jordan3):
    with pytest.raises(SpecParseError):
        suites.run_suites("banana", context(FiniteMatrix(matrix=jordan3)))


def test_aborted_suite_becomes_a_failed_check(context, jordan3, monkeypatch):
    def explode(ctx):
        raise ConditioningError("singular")

    monkeypatch.setitem(suites.SUITES, "drazin", explode)
    [outcome] = suites.run_suites("drazin", context(FiniteMatrix(matrix=jordan3)))
    assert outcome.checks[0].name == "drazin.completed"
    assert not outcome.checks[0].passed
    assert outcome.checks[0].detail == "singular"


def test_finite_diagonal_is_treated_as_a_matrix(context):
    model = Diagonal(points=[om.PointEntry(value="2"), om.PointEntry(value="0")])
    outcome = suites.drazin_suite(context(model))
    assert not outcome.skipped
    assert all(c.passed for c in outcome.checks)
