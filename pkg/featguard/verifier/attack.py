from typing import Optional

import numpy as np

from featguard.common.constants import DEFAULT_RESTARTS, DEFAULT_STEPS
from featguard.common.errors import ConfigurationError
from featguard.common.log import get_logger
from featguard.core.classifier import ScoredClassifier, predict
from featguard.core.space import DistortionBudget, apply_distortion
from featguard.verifier.space import QuantizedSpace

logger = get_logger(__name__)


def _objective(f, y, reference: int) -> float:
    """How close y is to leaving ``reference``: best rival score minus the reference score."""
    scores = np.asarray(f.scores(y), dtype=float)
    rivals = np.delete(scores, reference)
    return float(rivals.max() - scores[reference]) if rivals.size else -np.inf


def greedy_attack(f, x, budget: DistortionBudget, space: Optional[QuantizedSpace] = None,
                  restarts: int = DEFAULT_RESTARTS, steps: int = DEFAULT_STEPS, seed: int = 0) -> Optional[np.ndarray]:
    """Randomised search for γ with |γ| ≤ λ and f(x + γ) ≠ f(x).

    Every step moves one random coordinate by one grid step. Classifiers exposing ``scores`` keep a move only when
    it does not lower the best rival's lead; others take a random walk. The returned γ is the effective distortion
    (after clamping to the space) and is re-checked against the budget and the output change before returning.
    Deterministic given ``seed``.
    """
    if restarts < 1 or steps < 1:
        raise ConfigurationError("greedy attack needs at least one restart and one step")

    space = space if space is not None else getattr(f, "space", None)
    if not isinstance(space, QuantizedSpace):
        raise ConfigurationError("greedy attack needs a quantized input space to step on")

    if budget.lam == 0:
        return None

    origin = space.encode(x)
    reference = predict(f, x)
    scored = isinstance(f, ScoredClassifier) and hasattr(reference, "id")
    rng = np.random.default_rng(seed)
    for restart in range(restarts):
        gamma = np.zeros(space.dims)
        current = _objective(f, x, reference.id) if scored else 0.0
        for _ in range(steps):
            coordinate = int(rng.integers(space.dims))
            proposal = gamma.copy()
            proposal[coordinate] += space.step[coordinate] * (1 if rng.random() < 0.5 else -1)
            if not budget.admits(proposal):
                continue

            y = apply_distortion(x, proposal, space)
            if predict(f, y) != reference:
                effective = space.encode(y) - origin
                if budget.admits(effective) and predict(f, space.decode(origin + effective)) != reference:
                    logger.debug("greedy attack succeeded on restart %d", restart)
                    return effective
                continue

            if scored:
                value = _objective(f, y, reference.id)
                if value < current:
                    continue
                current = value

            gamma = proposal

    return None
