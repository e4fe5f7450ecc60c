from enum import Enum
from typing import Any, Hashable, Iterable, List, NamedTuple, Optional, Protocol, runtime_checkable

import numpy as np

from featguard.common.errors import FeatguardError
from featguard.core.labels import Label, LabelSet
from featguard.core.space import DistortionBudget, InputSpace, apply_distortion


@runtime_checkable
class Classifier(Protocol):
    """Deterministic total function from the inputs of ``space`` to ``labels``."""
    space: InputSpace
    labels: LabelSet

    def __call__(self, x: Any) -> Label:
        ...


@runtime_checkable
class Oracle(Protocol):
    """Ground truth: a label of ``labels`` or ``None`` for nonsense inputs."""
    space: InputSpace
    labels: LabelSet

    def __call__(self, x: Any) -> Optional[Label]:
        ...


@runtime_checkable
class ScoredClassifier(Classifier, Protocol):
    """Classifier whose label is the lowest-index argmax of ``scores``."""

    def scores(self, x: Any) -> np.ndarray:
        ...


class Correctness(str, Enum):
    correct = "correct"
    incorrect = "incorrect"
    nonsense = "nonsense"


def predict(f, x) -> Optional[Hashable]:
    """f(x), or ``None`` when f refuses the input (e.g. no foreground to decide on)."""
    try:
        return f(x)

    except FeatguardError:
        return None


def correctness_of(f: Classifier, o: Oracle, x) -> Correctness:
    truth = o(x)
    if truth is None:
        return Correctness.nonsense

    return Correctness.correct if f(x) == truth else Correctness.incorrect


class Partition(NamedTuple):
    correct: List[Any]
    incorrect: List[Any]
    natural: List[Any]


def partition(f: Classifier, o: Oracle, points: Iterable[Any]) -> Partition:
    """Split a finite domain into C_f, I_f and N_f = C_f ∪ I_f."""
    result = Partition([], [], [])
    for x in points:
        verdict = correctness_of(f, o, x)
        if verdict is Correctness.nonsense:
            continue

        result.natural.append(x)
        (result.correct if verdict is Correctness.correct else result.incorrect).append(x)

    return result


def is_lambda_adversarial(f: Classifier, o: Oracle, x, gamma, budget: DistortionBudget) -> bool:
    """Whether x is the adversarial point witnessed by γ.

    x must be misclassified (and natural), |γ| ≤ λ, and x + γ must be classified
    correctly while keeping x's true label.
    """
    shifted = apply_distortion(x, gamma, f.space)
    if not budget.admits(gamma):
        return False

    truth = o(x)
    if truth is None or f(x) == truth:
        return False

    shifted_truth = o(shifted)
    return shifted_truth == truth and f(shifted) == shifted_truth
