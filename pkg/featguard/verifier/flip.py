"""Smallest distortion that changes a classifier's output.

On a plain quantized space this is a scan over every grid point. Voting extractors on image spaces are solved
exactly per pixel instead: each pixel only matters through the state it lands in, so the search runs over the
cheapest grid colour of every (pixel, state) pair. Linf takes the largest per-pixel cost, so a sweep over the
candidate radii finds the optimum; L1 and L2 add per-pixel costs and are solved by dynamic programming over the
vote gain.
"""
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from featguard.common.constants import DEFAULT_ENUMERATION_CAP
from featguard.common.errors import EnumerationCapExceeded
from featguard.common.log import get_logger
from featguard.core.classifier import predict
from featguard.core.space import NormKind, norm_of
from featguard.core.table import tabulate
from featguard.extractors.base import VotingExtractor
from featguard.extractors.image import ImageSpace
from featguard.verifier.space import QuantizedSpace

logger = get_logger(__name__)


class FlipResult(NamedTuple):
    distance: float
    gamma: np.ndarray


def _codes(f, space: QuantizedSpace) -> np.ndarray:
    if getattr(f, "table", None) is not None or hasattr(f, "tabulate"):
        return tabulate(f, space)

    # refusals (e.g. no foreground) count as an output of their own
    return np.fromiter((f.labels.id_of(predict(f, space.decode(point))) for point in space.points()),
                       dtype=np.int64, count=space.size)


def _grid_flip(f, x, space: QuantizedSpace, norm: NormKind, cap: int) -> Optional[FlipResult]:
    if space.size > cap:
        raise EnumerationCapExceeded(required=space.size, cap=cap)

    vector = space.encode(x)
    codes = _codes(f, space)
    differs = codes != codes[space.index_of(vector)]
    if not differs.any():
        return None

    gammas = space.points()[differs] - vector
    distances = np.linalg.norm(gammas, ord=norm.ord, axis=1)
    best = int(np.argmin(distances))
    return FlipResult(float(distances[best]), gammas[best])


def _pixel_costs(colors: np.ndarray, pixel: np.ndarray, norm: NormKind) -> np.ndarray:
    delta = np.abs(colors - pixel)
    if norm is NormKind.linf:
        return delta.max(axis=1)

    if norm is NormKind.l1:
        return delta.sum(axis=1)

    # squared, so that costs add up across pixels
    return (delta ** 2).sum(axis=1)


def _sweep(cost: np.ndarray, gain: np.ndarray, need: int) -> Optional[np.ndarray]:
    """Per-pixel states reaching total gain ``need`` with the smallest maximum cost."""
    radii = np.unique(cost[np.isfinite(cost)])

    def usable(r):
        return np.where(cost <= r, gain, -np.inf)

    def feasible(r):
        return usable(r).max(axis=1).sum() >= need

    lo, hi = 0, radii.size - 1
    if not feasible(radii[hi]):
        return None

    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(radii[mid]):
            hi = mid

        else:
            lo = mid + 1

    options = usable(radii[lo])
    best = options.max(axis=1, keepdims=True)
    # among the best-gain states, the cheapest one
    return np.argmin(np.where(options == best, cost, np.inf), axis=1)


def _knapsack(cost: np.ndarray, gain: np.ndarray, need: int) -> Optional[np.ndarray]:
    """Per-pixel states reaching total gain ``need`` with the smallest summed cost."""
    n_pixels, n_states = cost.shape
    js = np.arange(need + 1)
    dp = np.full((n_pixels + 1, need + 1), np.inf)
    dp[0, 0] = 0.0
    moves: List[List[Tuple[int, int, float]]] = []
    for p in range(n_pixels):
        pixel_moves = [(s, int(gain[p, s]), float(cost[p, s])) for s in range(n_states)
                       if gain[p, s] >= 0 and np.isfinite(cost[p, s])]
        moves.append(pixel_moves)
        for _, g, c in pixel_moves:
            np.minimum.at(dp[p + 1], np.minimum(js + g, need), dp[p] + c)

    if not np.isfinite(dp[n_pixels, need]):
        return None

    states = np.empty(n_pixels, dtype=np.int64)
    j = need
    for p in reversed(range(n_pixels)):
        for s, g, c in moves[p]:
            previous = range(max(0, need - g), need + 1) if j == need else [j - g]
            match = next((k for k in previous if 0 <= k and dp[p, k] + c == dp[p + 1, j]), None)
            if match is not None:
                states[p], j = s, match
                break

    return states


def _voting_flip(f: VotingExtractor, x, space: ImageSpace, norm: NormKind, cap: int) -> Optional[FlipResult]:
    vector = space.encode(x)
    space.coords_of(vector)
    pixels = space.decode(vector).pixels
    colors = space.channel_grid()
    required = pixels.shape[0] * colors.shape[0]
    if required > cap:
        raise EnumerationCapExceeded(required=required, cap=cap)

    logger.debug("minimal flip over %d pixels and %d colours", pixels.shape[0], colors.shape[0])
    current = f.pixel_states(pixels)
    winner = f.decide(current)
    color_states = f.pixel_states(colors)
    table = f.score_table(pixels.shape[0]).astype(np.int64)
    n_pixels, n_states = pixels.shape[0], f.n_states

    cost = np.full((n_pixels, n_states), np.inf)
    choice = np.zeros((n_pixels, n_states), dtype=np.int64)
    members = [np.flatnonzero(color_states == s) for s in range(n_states)]
    for p in range(n_pixels):
        costs = _pixel_costs(colors, pixels[p], norm)
        for s, member in enumerate(members):
            if member.size:
                j = member[np.argmin(costs[member])]
                cost[p, s], choice[p, s] = costs[j], j

    plans: List[np.ndarray] = []
    rows = np.arange(n_pixels)
    totals = table[rows, current].sum(axis=0)
    for target in range(table.shape[2]):
        if target == winner:
            continue

        diff = table[:, :, target] - table[:, :, winner]
        gain = diff - diff[rows, current][:, None]
        need = int(totals[winner] - totals[target]) + (0 if target < winner else 1)
        states = _sweep(cost, gain, need) if norm is NormKind.linf else _knapsack(cost, gain, need)
        if states is not None:
            plans.append(states)

    background = np.where(f.foreground_states[None, :], np.inf, cost)
    if np.isfinite(background.min(axis=1)).all():
        plans.append(np.argmin(background, axis=1))

    best: Optional[FlipResult] = None
    for states in plans:
        gamma = (colors[choice[rows, states]] - pixels).ravel()
        distance = norm_of(gamma, norm)
        if best is None or distance < best.distance:
            best = FlipResult(distance, gamma)

    return best


def minimal_flip(f, x, space: QuantizedSpace, norm: NormKind = NormKind.linf,
                 cap: int = DEFAULT_ENUMERATION_CAP) -> Optional[FlipResult]:
    """Smallest grid distortion γ with f(x + γ) ≠ f(x), or ``None`` when f is constant on the space."""
    norm = NormKind(norm)
    if isinstance(f, VotingExtractor) and isinstance(space, ImageSpace):
        return _voting_flip(f, x, space, norm, cap)
    return _grid_flip(f, x, space, norm, cap)


def minimal_flip_distortion(f, x, space: QuantizedSpace, norm: NormKind = NormKind.linf,
                            cap: int = DEFAULT_ENUMERATION_CAP) -> Optional[float]:
    result = minimal_flip(f, x, space, norm=norm, cap=cap)
    return None if result is None else result.distance
