import numpy as np
import pydantic
import pytest

from featguard.augment import (AugmentedClassifier, ToyBaseClassifier, augmented_predict, mask_and_renormalize,
                               shared_pairs, steer_within_pair)
from featguard.common.errors import ConfigurationError, DimensionMismatchError, UnknownTupleError
from featguard.composition.mapping import CandidateVector
from featguard.core.labels import LabelSet
from featguard.extractors.image import ImageInput
from featguard.signs import demo_pipeline


def _vector(bits) -> CandidateVector:
    k = sum(bits)
    return CandidateVector(bits=tuple(bits), weights=tuple(bit / k if k else 0.0 for bit in bits), unknown=not k)


@pytest.fixture(scope="module")
def pipeline():
    return demo_pipeline()


class _Fixed:
    """Base classifier answering the same softmax for every input."""

    def __init__(self, labels, probabilities):
        self.labels = labels
        self.probabilities = np.asarray(probabilities, dtype=float)

    def scores(self, x):
        return self.probabilities


def test_single_candidate_takes_all_mass():
    result = mask_and_renormalize(np.full(9, 1 / 9), _vector([1, 0, 0, 0, 0, 0, 0, 0, 0]))
    assert result.probabilities == [1.0] + [0.0] * 8
    assert result.index == 0
    assert not result.fallback


def test_shared_pair_renormalizes():
    softmax = np.full(9, 0.5 / 7)
    softmax[3], softmax[4] = 0.2, 0.3
    result = mask_and_renormalize(softmax, _vector([0, 0, 0, 1, 1, 0, 0, 0, 0]))
    assert result.probabilities == pytest.approx([0, 0, 0, 0.4, 0.6, 0, 0, 0, 0])
    assert result.index == 4


def test_zero_mass_falls_back_to_uniform():
    result = mask_and_renormalize([1.0] + [0.0] * 8, _vector([0, 0, 0, 1, 1, 0, 0, 0, 0]))
    assert result.fallback
    assert result.probabilities == [0, 0, 0, 0.5, 0.5, 0, 0, 0, 0]
    assert result.index == 3


def test_all_zero_candidates_are_refused():
    with pytest.raises(UnknownTupleError):
        mask_and_renormalize(np.full(3, 1 / 3), _vector([0, 0, 0]))


@pytest.mark.parametrize("scores", [[0.5, -0.2, 0.7], [0.0, 0.0, 0.0], [float("nan"), 0.5, 0.5], []])
def test_scores_must_be_non_negative_with_mass(scores):
    with pytest.raises(pydantic.ValidationError):
        mask_and_renormalize(scores, _vector([1, 0, 0][:len(scores)] or [1]))


@pytest.mark.parametrize("scale", [3.0, 0.25, 1e6])
def test_masking_ignores_positive_scale(scale):
    softmax = np.array([0.1, 0.2, 0.3, 0.4])
    candidates = _vector([1, 0, 1, 0])
    unscaled = mask_and_renormalize(softmax, candidates)
    scaled = mask_and_renormalize(softmax * scale, candidates)
    assert scaled.probabilities == pytest.approx(unscaled.probabilities, rel=1e-12, abs=1e-15)
    assert scaled.probabilities == pytest.approx([0.25, 0, 0.75, 0])
    assert (scaled.index, scaled.fallback) == (unscaled.index, unscaled.fallback)


def test_fallback_is_relative_to_the_score_mass():
    scores = np.array([1e-3, 1e-9, 3e-9])
    for scale in (1.0, 1e-12):
        result = mask_and_renormalize(scores * scale, _vector([0, 1, 1]))
        assert not result.fallback
        assert result.probabilities == pytest.approx([0, 0.25, 0.75])

    assert mask_and_renormalize(np.array([1.0, 1e-13, 0.0]), _vector([0, 1, 1])).fallback


def test_softmax_and_candidates_must_match():
    with pytest.raises(DimensionMismatchError):
        mask_and_renormalize(np.full(3, 1 / 3), _vector([1, 0]))


def test_masked_output_is_a_distribution_on_candidates():
    rng = np.random.default_rng(2024)
    for _ in range(10_000):
        n = int(rng.integers(2, 12))
        softmax = rng.dirichlet(np.full(n, 0.3))
        bits = (rng.random(n) < 0.4).astype(int)
        bits[rng.integers(n)] = 1
        result = np.asarray(mask_and_renormalize(softmax, _vector(bits.tolist())).probabilities)
        assert abs(result.sum() - 1) <= 1e-9
        assert np.all(result[bits == 0] == 0)


def test_shared_pairs(pipeline):
    assert shared_pairs(pipeline.catalog.mapping) == [(3, 4), (6, 7)]


def test_stop_stays_stop(pipeline):
    prediction = pipeline.augmented.predict(pipeline.render("Stop"))
    assert prediction.label.name == "Stop"
    assert prediction.probabilities[0] == 1.0


def test_excluded_base_prediction_is_forced_back(pipeline):
    labels = pipeline.catalog.labels
    confused = _Fixed(labels, [0.1, 0, 0, 0.9, 0, 0, 0, 0, 0])
    prediction = augmented_predict(confused, pipeline.classifier, pipeline.render("Stop"))
    assert labels[int(np.argmax(confused.scores(None)))].name == "Left Turn Ahead"
    assert prediction.label.name == "Stop"
    assert not prediction.fallback


def test_shared_pair_follows_the_base(pipeline):
    image = pipeline.render("Left Turn Ahead")
    base = pipeline.base.scores(image)
    prediction = pipeline.augmented.predict(image)
    assert prediction.label.id in (3, 4)
    assert prediction.label.id == (3 if base[3] >= base[4] else 4)


def test_unknown_tuple_abstains(pipeline):
    mask = pipeline.templates.mask("Octagon")
    pixels = np.where(mask[:, :, None], np.asarray(pipeline.palette.color_of("Blue")),
                      np.asarray(pipeline.palette.background))
    prediction = pipeline.augmented.predict(ImageInput(pixels))
    assert prediction.abstained
    assert prediction.label is None
    assert sum(prediction.probabilities) == 0


def test_background_abstains(pipeline):
    blank = ImageInput.filled(pipeline.size, pipeline.size, pipeline.palette.background)
    assert pipeline.augmented.predict(blank).abstained
    with pytest.raises(UnknownTupleError):
        pipeline.augmented(blank)


@pytest.mark.parametrize("target", ["Left Turn Ahead", "Right Turn Ahead"])
def test_steer_within_pair(pipeline, target):
    label = pipeline.catalog.labels.label(target)
    steered = steer_within_pair(pipeline.base, pipeline.render("Left Turn Ahead"), label, epsilon=0.05)
    assert pipeline.classifier.features(steered) == pipeline.classifier.features(pipeline.render("Left Turn Ahead"))
    assert pipeline.augmented(steered) == label


def test_steer_needs_a_pair(pipeline):
    with pytest.raises(ConfigurationError):
        steer_within_pair(pipeline.base, pipeline.render("Stop"), pipeline.catalog.labels.label("Stop"), 0.05)


def test_toy_base_needs_every_prototype(pipeline):
    labels = pipeline.catalog.labels
    with pytest.raises(ConfigurationError):
        ToyBaseClassifier(labels, {labels.label("Stop"): pipeline.render("Stop")})


def test_augmented_classifier_needs_shared_labels(pipeline):
    with pytest.raises(ConfigurationError):
        AugmentedClassifier(_Fixed(LabelSet(["a"], namespace="other"), [1.0]), pipeline.classifier)
