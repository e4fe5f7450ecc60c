import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from featguard.common.errors import ConfigurationError, EnumerationCapExceeded
from featguard.core.certificate import CertificateStatus, Provenance
from featguard.core.classifier import is_lambda_adversarial
from featguard.core.labels import LabelSet
from featguard.core.space import DistortionBudget, InputSpace, NormKind, norm_of
from featguard.core.table import TableClassifier, TableOracle
from featguard.model.config import PipelineConfig
from featguard.model.config_file import config_digest
from featguard.model.report import AdversarialReport, Verdict, dumps_report
from featguard.verifier.attack import greedy_attack
from featguard.verifier.enumerate import (Witness, certify_domain, enumerate_adversarial_set,
                                          find_adversarial_neighbor, perturbation_ball, scan_tables,
                                          search_adversarial)
from featguard.verifier.flip import minimal_flip, minimal_flip_distortion
from featguard.verifier.space import QuantizedSpace

LABELS = LabelSet(["a", "b", "c"], namespace="t")


@pytest.fixture()
def line():
    return QuantizedSpace.grid(1, 0, 2, 1)


@pytest.fixture()
def oracle(line):
    return TableOracle(line, LABELS, [0, 0, 0])


@pytest.fixture()
def f(line):
    return TableClassifier(line, LABELS, [0, 1, 0])


@pytest.fixture()
def threshold():
    space = QuantizedSpace.grid(1, 0, 10, 1)
    return TableClassifier(space, LABELS, [0] * 5 + [1] * 6)


def _random_tables(seed: int, space: QuantizedSpace):
    rng = np.random.default_rng(seed)
    o = TableOracle(space, LABELS, rng.integers(-1, len(LABELS), size=space.size))
    f = TableClassifier(space, LABELS, rng.integers(0, len(LABELS), size=space.size))
    return f, o


@pytest.mark.parametrize("norm, lam, expected", [
    (NormKind.linf, 1, 9),
    (NormKind.l1, 1, 5),
    (NormKind.l2, 1, 5),
    (NormKind.l2, 1.5, 9),
    (NormKind.linf, 0, 1),
])
def test_perturbation_ball_size(norm, lam, expected):
    space = QuantizedSpace.grid(2, 0, 4, 1)
    assert perturbation_ball(space, DistortionBudget(norm=norm, lam=lam)).shape == (expected, 2)


def test_perturbation_ball_is_sorted():
    ball = perturbation_ball(QuantizedSpace.grid(2, 0, 4, 1), DistortionBudget(norm=NormKind.l1, lam=1))
    assert ball.tolist() == [[-1, 0], [0, -1], [0, 0], [0, 1], [1, 0]]


def test_perturbation_ball_respects_step():
    space = QuantizedSpace.grid(1, 0, 1, 0.25)
    assert perturbation_ball(space, DistortionBudget(lam=0.5)).ravel().tolist() == [-2, -1, 0, 1, 2]


def test_perturbation_ball_limit():
    with pytest.raises(EnumerationCapExceeded):
        perturbation_ball(QuantizedSpace.grid(3, 0, 10, 1), DistortionBudget(lam=3), limit=10)


def test_three_point_adversarial_set(f, oracle, line):
    witnesses = enumerate_adversarial_set(f, oracle, line, DistortionBudget(lam=1))
    assert witnesses == [Witness((1.0,), (-1.0,)), Witness((1.0,), (1.0,))]


def test_three_point_witnesses_check_out(f, oracle, line):
    budget = DistortionBudget(lam=1)
    for witness in enumerate_adversarial_set(f, oracle, line, budget):
        assert is_lambda_adversarial(f, oracle, np.asarray(witness.x), np.asarray(witness.gamma), budget)


def test_accurate_classifier_is_resilient(oracle, line):
    perfect = TableClassifier(line, LABELS, [0, 0, 0])
    for lam in (0, 1, 2):
        assert enumerate_adversarial_set(perfect, oracle, line, DistortionBudget(lam=lam)) == []


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_zero_budget_adversarial_set_is_empty(seed):
    space = QuantizedSpace.grid(2, 0, 4, 1)
    f, o = _random_tables(seed, space)
    assert enumerate_adversarial_set(f, o, space, DistortionBudget(lam=0)) == []


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_enumeration_ignores_worker_count(seed):
    space = QuantizedSpace.grid(2, 0, 6, 1)
    f, o = _random_tables(seed, space)
    budget = DistortionBudget(norm=NormKind.l2, lam=2)
    assert (enumerate_adversarial_set(f, o, space, budget, workers=1)
            == enumerate_adversarial_set(f, o, space, budget, workers=4))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_every_witness_is_adversarial(seed):
    space = QuantizedSpace.grid(2, 0, 4, 1)
    f, o = _random_tables(seed, space)
    budget = DistortionBudget(norm=NormKind.l1, lam=2)
    for witness in enumerate_adversarial_set(f, o, space, budget):
        assert is_lambda_adversarial(f, o, np.asarray(witness.x), np.asarray(witness.gamma), budget)


def test_enumeration_cap(f, oracle, line):
    with pytest.raises(EnumerationCapExceeded):
        scan_tables(f.table, oracle.table, line, DistortionBudget(lam=1), cap=5)


def test_search_adversarial_found(f, oracle, line):
    report = search_adversarial(f, oracle, line, DistortionBudget(lam=1))
    assert report.verdict is Verdict.adversarial_found
    assert report.witness.x == [1.0]
    assert report.witness.gamma == [-1.0]
    assert report.witnesses == 2
    assert report.points_examined == 3


def test_search_adversarial_resilient(oracle, line):
    report = search_adversarial(TableClassifier(line, LABELS, [0, 0, 0]), oracle, line, DistortionBudget(lam=1))
    assert report.verdict is Verdict.resilient
    assert report.witness is None


def test_search_adversarial_budget_exhausted(f, oracle, line):
    report = search_adversarial(f, oracle, line, DistortionBudget(lam=1), cap=2)
    assert report.verdict is Verdict.budget_exhausted


@pytest.mark.parametrize("lam", [0, 1])
def test_search_adversarial_report_is_reproducible(lam):
    space = QuantizedSpace.grid(2, 0, 5, 1)
    f, oracle = _random_tables(4, space)
    digest = config_digest(PipelineConfig())
    first, second = (search_adversarial(f, oracle, space, DistortionBudget(lam=lam), seed=9, config_digest=digest)
                     for _ in range(2))
    assert (first.seed, first.config_digest) == (9, digest)
    assert dumps_report(first, record_timing=False) == dumps_report(second, record_timing=False)
    assert '"elapsed_ms": null' in dumps_report(first, record_timing=False)


def test_report_needs_witness_when_found():
    with pytest.raises(ValueError):
        AdversarialReport(verdict=Verdict.adversarial_found)


def test_certify_domain(f, oracle, line):
    budget = DistortionBudget(lam=1)
    refuted = certify_domain(f, oracle, line, budget)
    assert refuted.status is CertificateStatus.refuted
    assert refuted.provenance is Provenance.exhaustive

    certified = certify_domain(TableClassifier(line, LABELS, [0, 0, 0]), oracle, line, budget)
    assert certified.status is CertificateStatus.certified


def test_find_adversarial_neighbor(f, oracle, line):
    assert find_adversarial_neighbor(f, oracle, [2], line, DistortionBudget(lam=1)) == Witness((1.0,), (1.0,))


def test_find_adversarial_neighbor_needs_correct_seed(f, oracle, line):
    assert find_adversarial_neighbor(f, oracle, [1], line, DistortionBudget(lam=1)) is None


def test_find_adversarial_neighbor_out_of_reach(f, oracle, line):
    assert find_adversarial_neighbor(f, oracle, [0], line, DistortionBudget(lam=0)) is None


def test_minimal_flip_threshold(threshold):
    flip = minimal_flip(threshold, [4], threshold.space)
    assert flip.distance == 1.0
    assert flip.gamma.tolist() == [1.0]


def test_minimal_flip_constant(line):
    constant = TableClassifier(line, LABELS, [2, 2, 2])
    assert minimal_flip_distortion(constant, [1], line) is None


def test_minimal_flip_cap(threshold):
    with pytest.raises(EnumerationCapExceeded):
        minimal_flip(threshold, [4], threshold.space, cap=5)


def test_minimal_flip_norms():
    space = QuantizedSpace.grid(2, 0, 2, 1)
    # differs from the origin only at (2, 2)
    f = TableClassifier(space, LABELS, [0] * 8 + [1])
    assert minimal_flip_distortion(f, [0, 0], space, norm=NormKind.linf) == 2.0
    assert minimal_flip_distortion(f, [0, 0], space, norm=NormKind.l1) == 4.0


def test_greedy_attack_finds_one_step_flip(threshold):
    budget = DistortionBudget(lam=1)
    gamma = greedy_attack(threshold, [4], budget, seed=0)
    assert gamma is not None
    assert budget.admits(gamma)
    assert threshold(threshold.space.point(4) + gamma) != threshold([4])


def test_greedy_attack_zero_budget(threshold):
    assert greedy_attack(threshold, [4], DistortionBudget(lam=0), seed=0) is None


def test_greedy_attack_is_deterministic(threshold):
    budget = DistortionBudget(norm=NormKind.l1, lam=3)
    first = greedy_attack(threshold, [2], budget, seed=7)
    second = greedy_attack(threshold, [2], budget, seed=7)
    assert (first is None and second is None) or np.array_equal(first, second)


def test_greedy_attack_respects_budget(threshold):
    budget = DistortionBudget(norm=NormKind.l2, lam=2)
    gamma = greedy_attack(threshold, [1], budget, seed=3)
    assert gamma is None or norm_of(gamma, NormKind.l2) <= 2


def test_greedy_attack_needs_quantized_space():
    class Continuous:
        space = InputSpace.uniform(1, 0, 1)
        labels = LABELS

        def __call__(self, x):
            return LABELS[0]

    with pytest.raises(ConfigurationError):
        greedy_attack(Continuous(), [0.5], DistortionBudget(lam=0.1))


def test_greedy_attack_needs_iterations(threshold):
    with pytest.raises(ConfigurationError):
        greedy_attack(threshold, [4], DistortionBudget(lam=1), restarts=0)
