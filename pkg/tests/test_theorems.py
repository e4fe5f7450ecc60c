import numpy as np
import pytest

from featguard.common.errors import ConfigurationError, HypothesisError
from featguard.composition.compose import LabelTable
from featguard.core.labels import LabelSet
from featguard.core.space import DistortionBudget, NormKind
from featguard.core.table import TableClassifier, TableOracle
from featguard.model.config import CampaignSection
from featguard.model.report import HypothesisKind, TheoremVerdict
from featguard.verifier.campaign import random_pipeline, run_parallel_campaign, run_serial_campaign
from featguard.verifier.enumerate import enumerate_adversarial_set
from featguard.verifier.space import QuantizedSpace
from featguard.verifier.theorems import first_witness, verify_parallel_theorem, verify_serial_theorem

COLORS = LabelSet(["Red", "Yellow", "Blue"], namespace="color")
SHAPES = LabelSet(["Octagon", "Diamond"], namespace="shape")
SIGNS = LabelSet(["Stop", "Warning", "Info"], namespace="sign")
BUDGET = DistortionBudget(norm=NormKind.linf, lam=1)


@pytest.fixture()
def space():
    return QuantizedSpace.grid(1, 0, 5, 1)


@pytest.fixture()
def color_oracle(space):
    return TableOracle(space, COLORS, [0, 0, 1, 1, 2, 2])


@pytest.fixture()
def identity():
    return LabelTable([COLORS], SIGNS, [0, 1, 2])


def _dump(report):
    return report.dict(exclude={"elapsed_ms"})


def test_resilient_extractor_holds(space, color_oracle, identity):
    f = TableClassifier(space, COLORS, color_oracle.table)
    report = verify_serial_theorem(f, identity, color_oracle, identity, space, BUDGET)
    assert report.verdict is TheoremVerdict.holds
    assert report.counterexamples == []
    assert report.hypothesis_failures == []
    assert report.points_examined == 0


def test_isolated_error_is_still_resilient(space, color_oracle, identity):
    # x = 0 is wrong, but its only same-label neighbour x = 1 is wrong too
    f = TableClassifier(space, COLORS, [1, 2, 1, 1, 2, 2])
    assert enumerate_adversarial_set(f, color_oracle, space, BUDGET) == []
    report = verify_serial_theorem(f, identity, color_oracle, identity, space, BUDGET)
    assert report.verdict is TheoremVerdict.holds


def test_broken_extractor_fails_the_hypothesis(space, color_oracle, identity):
    f = TableClassifier(space, COLORS, [1, 0, 1, 1, 2, 2])
    report = verify_serial_theorem(f, identity, color_oracle, identity, space, BUDGET)
    assert report.verdict is TheoremVerdict.hypothesis_failed
    assert report.counterexamples == []
    [failure] = report.hypothesis_failures
    assert failure.kind is HypothesisKind.stage_one_not_resilient
    assert failure.stage == 0
    assert failure.witness.x == [0.0]
    assert failure.witness.gamma == [1.0]
    assert first_witness(report) is failure
    assert first_witness(report, stage=0) is failure
    assert first_witness(report, stage=1) is None


def test_strict_raises(space, color_oracle, identity):
    f = TableClassifier(space, COLORS, [1, 0, 1, 1, 2, 2])
    with pytest.raises(HypothesisError):
        verify_serial_theorem(f, identity, color_oracle, identity, space, BUDGET, strict=True)


def test_stage_two_disagreement(space, color_oracle, identity):
    f = TableClassifier(space, COLORS, color_oracle.table)
    g = LabelTable([COLORS], SIGNS, [0, 2, 1])
    report = verify_serial_theorem(f, g, color_oracle, identity, space, BUDGET)
    assert report.verdict is TheoremVerdict.hypothesis_failed
    assert [failure.kind for failure in report.hypothesis_failures] == [HypothesisKind.stage_two_disagrees]


def test_oracle_must_be_injective(space, color_oracle):
    f = TableClassifier(space, COLORS, color_oracle.table)
    merged = LabelTable([COLORS], SIGNS, [0, 1, 1])
    report = verify_serial_theorem(f, merged, color_oracle, merged, space, BUDGET)
    assert [failure.kind for failure in report.hypothesis_failures] == [HypothesisKind.oracle_not_injective]
    assert first_witness(report) is None


def test_stage_two_must_be_a_table(space, color_oracle, identity):
    f = TableClassifier(space, COLORS, color_oracle.table)
    with pytest.raises(ConfigurationError):
        verify_serial_theorem(f, object(), color_oracle, identity, space, BUDGET)


def test_parallel_of_one_matches_serial(space, color_oracle, identity):
    f = TableClassifier(space, COLORS, [1, 2, 1, 1, 2, 2])
    serial = verify_serial_theorem(f, identity, color_oracle, identity, space, BUDGET)
    parallel = verify_parallel_theorem([f], identity, [color_oracle], identity, space, BUDGET)
    assert _dump(serial) == _dump(parallel)


def test_parallel_needs_one_oracle_per_extractor(space, color_oracle, identity):
    f = TableClassifier(space, COLORS, color_oracle.table)
    with pytest.raises(ConfigurationError):
        verify_parallel_theorem([f, f], identity, [color_oracle], identity, space, BUDGET)


def test_color_and_shape_pipeline_holds(space, color_oracle):
    shape_oracle = TableOracle(space, SHAPES, [0, 0, 0, 1, 1, 1])
    outputs = LabelSet([f"z{i}" for i in range(6)], namespace="out")
    g = LabelTable([COLORS, SHAPES], outputs, np.arange(6).reshape(3, 2))
    fs = [TableClassifier(space, COLORS, [1, 2, 1, 1, 2, 2]), TableClassifier(space, SHAPES, shape_oracle.table)]
    report = verify_parallel_theorem(fs, g, [color_oracle, shape_oracle], g, space, BUDGET, workers=2)
    assert report.verdict is TheoremVerdict.holds
    assert report.arity == 2


def test_random_pipeline_meets_the_hypotheses():
    section = CampaignSection(pipelines=1, max_points=300)
    pipeline = random_pipeline(np.random.default_rng(11), 2, section, section.budget)
    assert pipeline.broken is None
    assert pipeline.stage_two_oracle.is_injective()
    assert pipeline.stage_two.agrees_with(pipeline.stage_two_oracle)
    for f, o in zip(pipeline.extractors, pipeline.oracles):
        assert enumerate_adversarial_set(f, o, pipeline.space, section.budget) == []


@pytest.mark.slow
def test_serial_campaign_has_no_counterexamples():
    section = CampaignSection(pipelines=500, max_points=500)
    report = run_serial_campaign(section, seed=0)
    assert report.counterexamples == 0
    assert report.hypothesis_failures == 0
    assert report.holds == 500


@pytest.mark.slow
def test_parallel_campaign_has_no_counterexamples():
    section = CampaignSection(pipelines=500, max_points=500, arities=[2, 3])
    reports = run_parallel_campaign(section, seed=0)
    assert [report.arity for report in reports] == [2, 3]
    assert all(report.counterexamples == 0 and report.holds == 500 for report in reports)


@pytest.mark.slow
def test_broken_campaign_is_caught():
    section = CampaignSection(pipelines=100, max_points=500, broken=True)
    report = run_serial_campaign(section, seed=1)
    assert report.counterexamples == 0
    assert report.broken_pipelines > 0
    assert report.hypothesis_failures >= report.broken_pipelines
    assert report.broken_witnessed >= 0.95 * report.broken_pipelines
    assert report.samples


def test_campaign_is_deterministic():
    section = CampaignSection(pipelines=5, max_points=300, broken=True)
    first = run_parallel_campaign(section, seed=42, arities=[2])[0]
    second = run_parallel_campaign(section, seed=42, arities=[2], workers=3)[0]
    assert ([_dump(sample) for sample in first.samples] == [_dump(sample) for sample in second.samples])
    assert (first.holds, first.hypothesis_failures) == (second.holds, second.hypothesis_failures)


def test_campaign_on_a_fixed_grid():
    grid = QuantizedSpace.grid(2, 0, 9, 1)
    section = CampaignSection(pipelines=10, max_points=500, broken=True)
    report = run_serial_campaign(section, seed=3, space=grid)
    assert report.counterexamples == 0
    assert report.samples
    assert {sample.domain for sample in report.samples} == {grid.describe()}
    assert all(len(failure.witness.x) == 2 for sample in report.samples
               for failure in sample.hypothesis_failures if failure.witness is not None)


def test_fixed_grid_is_shared_by_the_pipeline():
    section = CampaignSection(pipelines=1, max_points=300)
    grid = QuantizedSpace.grid(1, 0, 7, 1)
    pipeline = random_pipeline(np.random.default_rng(5), 2, section, section.budget, space=grid)
    assert pipeline.space is grid
    assert all(f.space is grid for f in pipeline.extractors)
    assert all(o.space is grid for o in pipeline.oracles)
