"""Masking a base classifier's softmax with the candidate vector of a composed classifier."""
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pydantic
from pydantic import BaseModel, BaseConfig, validator

from featguard.common.constants import ZERO_MASS
from featguard.common.errors import ConfigurationError, DimensionMismatchError, NoForegroundError, UnknownTupleError
from featguard.composition.mapping import CandidateVector, MappingTable
from featguard.core.labels import Label, LabelSet
from featguard.extractors.base import as_image
from featguard.extractors.image import ImageInput


class SoftmaxVector(BaseModel):
    """Base classifier scores; any positive multiple of a softmax masks to the same result."""
    probabilities: List[float]

    class Config(BaseConfig):
        extra = pydantic.Extra.forbid

    @validator("probabilities")
    def _distribution(cls, probabilities):
        if not probabilities or any(not math.isfinite(p) or p < 0 for p in probabilities):
            raise ValueError("softmax entries must be finite and non-negative")

        if sum(probabilities) <= 0:
            raise ValueError("softmax must have positive mass")
        return probabilities

    @classmethod
    def of(cls, values) -> "SoftmaxVector":
        if isinstance(values, SoftmaxVector):
            return values
        return cls(probabilities=[float(v) for v in np.asarray(values, dtype=float).ravel()])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probabilities, dtype=float)


class AugmentedPrediction(BaseModel):
    """Masked softmax and its argmax; ``fallback`` marks the uniform-over-candidates rescue."""
    probabilities: List[float]
    index: Optional[int] = None
    label: Optional[Label] = None
    fallback: bool = False
    abstained: bool = False

    class Config(BaseConfig):
        extra = pydantic.Extra.forbid


def mask_and_renormalize(s, c: CandidateVector, labels: Optional[LabelSet] = None) -> AugmentedPrediction:
    probabilities = SoftmaxVector.of(s).as_array()
    mask = c.as_array()
    if probabilities.size != mask.size:
        raise DimensionMismatchError("softmax has {value} entries, candidate vector has {key}",
                                     value=probabilities.size, key=mask.size)

    if not mask.any():
        raise UnknownTupleError("candidate vector {value} is all zero; handle the unknown feature tuple first",
                                value=str(c))

    masked = probabilities * mask
    total = masked.sum()
    fallback = bool(total < ZERO_MASS * probabilities.sum())
    result = mask / mask.sum() if fallback else masked / total
    index = int(np.argmax(result))
    return AugmentedPrediction(
        probabilities=result.tolist(),
        index=index,
        label=labels[index] if labels is not None else None,
        fallback=fallback,
    )


def augmented_predict(base, robust, x) -> AugmentedPrediction:
    """Base softmax masked by the robust candidate vector; unknown tuples abstain instead of passing through."""
    if base.labels != robust.labels:
        raise ConfigurationError("base classifier labels {value} differ from composed labels {key}",
                                 value=base.labels, key=robust.labels)

    try:
        candidates = robust(x)

    except NoForegroundError:
        candidates = None

    if candidates is None or candidates.unknown:
        return AugmentedPrediction(probabilities=[0.0] * len(robust.labels), abstained=True)

    return mask_and_renormalize(base.scores(x), candidates, labels=robust.labels)


class AugmentedClassifier:
    """Scored classifier whose scores are the masked softmax; abstentions raise ``UnknownTupleError``."""

    def __init__(self, base, robust):
        if base.labels != robust.labels:
            raise ConfigurationError("base and composed classifiers must share one label set")

        self.base = base
        self.robust = robust
        self.space = robust.space
        self.labels = robust.labels

    def predict(self, x) -> AugmentedPrediction:
        return augmented_predict(self.base, self.robust, x)

    def scores(self, x) -> np.ndarray:
        return np.asarray(self.predict(x).probabilities)

    def __call__(self, x) -> Label:
        prediction = self.predict(x)
        if prediction.abstained or prediction.label is None:
            raise UnknownTupleError("composed classifier abstains on this input")
        return prediction.label


def shared_pairs(mapping: MappingTable) -> List[Tuple[int, int]]:
    """Consecutive label-id pairs inside every candidate set of more than one label."""
    pairs = []
    for labels in mapping.inverse.values():
        ids = sorted(label.id for label in labels)
        pairs.extend(zip(ids, ids[1:]))
    return sorted(pairs)


def _halves(image: ImageInput) -> Tuple[slice, slice]:
    half = image.width // 2
    return slice(0, half), slice(image.width - half, image.width)


def asymmetry(image: ImageInput) -> float:
    """Mean brightness of the right half minus the left half."""
    left, right = _halves(image)
    brightness = image.array.mean(axis=2)
    return float(brightness[:, right].mean() - brightness[:, left].mean())


class ToyBaseClassifier:
    """Stand-in for a trained network: softmax over prototype distances.

    Labels sharing a feature tuple also share a prototype; a left/right brightness term splits each such pair,
    favouring the higher label id when the right half is brighter.
    """

    def __init__(self, labels: LabelSet, prototypes: Dict[Label, ImageInput], pairs: Sequence[Tuple[int, int]] = (),
                 temperature: float = 0.01, asymmetry_weight: float = 200.0, space=None):
        missing = [label.name for label in labels if label not in prototypes]
        if missing:
            raise ConfigurationError("no prototype for labels {value}", value=missing)

        self.labels = labels
        self.prototypes = np.stack([prototypes[label].array for label in labels])
        self.pairs = list(pairs)
        self.temperature = temperature
        self.asymmetry_weight = asymmetry_weight
        self.space = space

    def _image(self, x) -> ImageInput:
        if isinstance(x, ImageInput):
            return x
        if self.space is not None:
            return self.space.decode(np.asarray(x, dtype=float).ravel())
        return as_image(x, self.prototypes.shape[2], self.prototypes.shape[1])

    def logits(self, x) -> np.ndarray:
        image = self._image(x)
        if image.array.shape != self.prototypes.shape[1:]:
            raise DimensionMismatchError("image is {value}, prototypes are {key}",
                                         value=image.array.shape, key=self.prototypes.shape[1:])

        logits = -((self.prototypes - image.array) ** 2).mean(axis=(1, 2, 3)) / self.temperature
        lean = self.asymmetry_weight * asymmetry(image)
        for first, second in self.pairs:
            logits[first] -= lean
            logits[second] += lean
        return logits

    def scores(self, x) -> np.ndarray:
        logits = self.logits(x)
        weights = np.exp(logits - logits.max())
        return weights / weights.sum()

    def __call__(self, x) -> Label:
        return self.labels[int(np.argmax(self.scores(x)))]


def steer_within_pair(base: ToyBaseClassifier, x, target: Label, epsilon: float) -> ImageInput:
    """Linf-ε distortion pushing the base classifier toward ``target`` inside its shared-tuple pair.

    Brightens (or darkens) the right half of the image, which moves nothing but the pair's tie-break.
    """
    pair = next(((a, b) for a, b in base.pairs if target.id in (a, b)), None)
    if pair is None:
        raise ConfigurationError("label {label} shares its feature tuple with no other label", label=target.name)

    image = base._image(x)
    direction = 1.0 if target.id == pair[1] else -1.0
    shifted = image.array.copy()
    shifted[:, _halves(image)[1]] += direction * epsilon
    return ImageInput(np.clip(shifted, 0.0, 1.0))
