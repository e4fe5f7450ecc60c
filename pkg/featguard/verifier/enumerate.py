"""Exhaustive adversarial search over quantized input spaces.

Classifiers and oracles are tabulated once over the whole grid; every (x, γ) pair is then checked with array
lookups. The ball of grid offsets is split across worker threads and the hits merged in lexicographic order, so
the result does not depend on the worker count.
"""
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from featguard.common.constants import DEFAULT_ENUMERATION_CAP, NONSENSE_ID, NORM_TOLERANCE
from featguard.common.errors import ConfigurationError, EnumerationCapExceeded
from featguard.common.log import get_logger
from featguard.core.certificate import CertificateStatus, Provenance, ResilienceCertificate
from featguard.core.classifier import Correctness, correctness_of, is_lambda_adversarial
from featguard.core.space import DistortionBudget, NormKind
from featguard.core.table import tabulate
from featguard.model.report import AdversarialReport, Verdict, WitnessModel
from featguard.verifier.space import QuantizedSpace

logger = get_logger(__name__)

# (x, γ) pairs checked per vectorised batch
_BATCH_PAIRS = 1 << 20


class Witness(NamedTuple):
    x: Tuple[float, ...]
    gamma: Tuple[float, ...]

    def model(self) -> WitnessModel:
        return WitnessModel(x=list(self.x), gamma=list(self.gamma))


class TableScan(NamedTuple):
    witnesses: List[Witness]
    pairs_examined: int


def perturbation_ball(space: QuantizedSpace, budget: DistortionBudget, limit: Optional[int] = None) -> np.ndarray:
    """Integer grid offsets k with |k·step| ≤ λ, as a lexicographically sorted (B, dims) array.

    Built one dimension at a time; partial offsets whose norm already exceeds λ are pruned. ``limit`` bounds the
    number of rows so huge balls fail fast with ``EnumerationCapExceeded``.
    """
    norm = NormKind(budget.norm)
    bound = budget.lam + NORM_TOLERANCE
    reach = np.floor(bound / space.step).astype(np.int64)
    threshold = bound ** 2 if norm is NormKind.l2 else bound

    offsets = np.zeros((1, 0), dtype=np.int64)
    partial = np.zeros(1)
    for dim in range(space.dims):
        steps = np.arange(-reach[dim], reach[dim] + 1)
        size = np.abs(steps * space.step[dim])
        if norm is NormKind.linf:
            acc = np.maximum(partial[:, None], size[None, :])

        elif norm is NormKind.l1:
            acc = partial[:, None] + size[None, :]

        else:
            acc = partial[:, None] + (size ** 2)[None, :]

        rows, cols = np.nonzero(acc <= threshold)
        offsets = np.hstack([offsets[rows], steps[cols][:, None]])
        partial = acc[rows, cols]
        if limit is not None and offsets.shape[0] > limit:
            raise EnumerationCapExceeded(required=offsets.shape[0], cap=limit)

    return offsets


def _scan(f_codes: np.ndarray, o_codes: np.ndarray, space: QuantizedSpace, offsets: np.ndarray,
          workers: int) -> Tuple[np.ndarray, np.ndarray, int]:
    incorrect = np.flatnonzero((o_codes != NONSENSE_ID) & (f_codes != o_codes))
    empty = np.zeros(0, dtype=np.int64)
    if incorrect.size == 0 or offsets.shape[0] == 0:
        return empty, empty, 0

    coords = np.stack(np.unravel_index(incorrect, space.shape), axis=1)
    truth = o_codes[incorrect]
    top = space.levels - 1
    batch = max(1, _BATCH_PAIRS // incorrect.size)

    def scan(chunk: np.ndarray):
        found_x, found_k = [], []
        for start in range(0, chunk.size, batch):
            ks = chunk[start:start + batch]
            shifted = np.clip(coords[None, :, :] + offsets[ks][:, None, :], 0, top)
            target = np.ravel_multi_index(tuple(shifted.reshape(-1, space.dims).T), space.shape)
            target = target.reshape(ks.size, incorrect.size)
            hit = (o_codes[target] == truth) & (f_codes[target] == truth)
            k_rows, x_cols = np.nonzero(hit)
            found_x.append(incorrect[x_cols])
            found_k.append(ks[k_rows])
        return np.concatenate(found_x or [empty]), np.concatenate(found_k or [empty])

    chunks = [chunk for chunk in np.array_split(np.arange(offsets.shape[0]), max(1, workers)) if chunk.size]
    if len(chunks) == 1:
        results = [scan(chunks[0])]

    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(scan, chunks))

    xs = np.concatenate([r[0] for r in results])
    ks = np.concatenate([r[1] for r in results])
    order = np.lexsort((ks, xs))
    return xs[order], ks[order], int(incorrect.size * offsets.shape[0])


def scan_tables(f_codes: np.ndarray, o_codes: np.ndarray, space: QuantizedSpace, budget: DistortionBudget,
                cap: int = DEFAULT_ENUMERATION_CAP, workers: int = 1) -> TableScan:
    """Adversarial set of a tabulated classifier against a tabulated oracle, lexicographically sorted."""
    if f_codes.shape != (space.size,) or o_codes.shape != (space.size,):
        raise ConfigurationError("tables must hold one code per point of the space")

    offsets = perturbation_ball(space, budget, limit=max(1, cap // space.size))
    required = space.size * offsets.shape[0]
    if required > cap:
        raise EnumerationCapExceeded(required=required, cap=cap)

    logger.debug("scanning %s against %d offsets", space.describe(), offsets.shape[0])
    xs, ks, examined = _scan(f_codes, o_codes, space, offsets, workers)
    witnesses = [
        Witness(tuple(space.point(int(x)).tolist()), tuple((offsets[k] * space.step).tolist()))
        for x, k in zip(xs, ks)
    ]
    return TableScan(witnesses, examined)


def adversarial_points(f_codes: np.ndarray, o_codes: np.ndarray, space: QuantizedSpace, budget: DistortionBudget,
                       cap: int = DEFAULT_ENUMERATION_CAP, workers: int = 1) -> np.ndarray:
    """Flat indices of the λ-adversarial points, without building witnesses."""
    offsets = perturbation_ball(space, budget, limit=max(1, cap // space.size))
    if space.size * offsets.shape[0] > cap:
        raise EnumerationCapExceeded(required=space.size * offsets.shape[0], cap=cap)

    xs, _, _ = _scan(f_codes, o_codes, space, offsets, workers)
    return np.unique(xs)


def enumerate_adversarial_set(f, o, space: QuantizedSpace, budget: DistortionBudget,
                              cap: int = DEFAULT_ENUMERATION_CAP, workers: int = 1) -> List[Witness]:
    """Every (x, γ) with x λ-adversarial for f witnessed by γ; empty iff f is λ-resilient on ``space``."""
    return scan_tables(tabulate(f, space), tabulate(o, space), space, budget, cap=cap, workers=workers).witnesses


def search_adversarial(f, o, space: QuantizedSpace, budget: DistortionBudget,
                       cap: int = DEFAULT_ENUMERATION_CAP, workers: int = 1, seed: Optional[int] = None,
                       config_digest: Optional[str] = None) -> AdversarialReport:
    started = time.perf_counter()
    provenance = dict(domain=space.describe(), seed=seed, config_digest=config_digest)
    try:
        scan = scan_tables(tabulate(f, space), tabulate(o, space), space, budget, cap=cap, workers=workers)

    except EnumerationCapExceeded as e:
        logger.warning("%s", e)
        return AdversarialReport(verdict=Verdict.budget_exhausted, **provenance,
                                 elapsed_ms=(time.perf_counter() - started) * 1000)

    witness = scan.witnesses[0].model() if scan.witnesses else None
    return AdversarialReport(
        verdict=Verdict.adversarial_found if witness else Verdict.resilient,
        witness=witness,
        witnesses=len(scan.witnesses),
        points_examined=scan.pairs_examined,
        **provenance,
        elapsed_ms=(time.perf_counter() - started) * 1000,
    )


def certify_domain(f, o, space: QuantizedSpace, budget: DistortionBudget,
                   cap: int = DEFAULT_ENUMERATION_CAP, workers: int = 1) -> ResilienceCertificate:
    witnesses = enumerate_adversarial_set(f, o, space, budget, cap=cap, workers=workers)
    return ResilienceCertificate(
        status=CertificateStatus.refuted if witnesses else CertificateStatus.certified,
        budget=budget,
        provenance=Provenance.exhaustive,
        domain=space.describe(),
    )


def find_adversarial_neighbor(f, o, seed, space: QuantizedSpace, budget: DistortionBudget) -> Optional[Witness]:
    """Adversarial point near a correctly classified ``seed``.

    Returns the lexicographically smallest (x', γ') with x' within λ of the seed, x' misclassified under the seed's
    true label and x' + γ' = seed; ``None`` when the seed is not correctly classified or no such x' exists.
    """
    seed_point = space.point(space.index_of(seed))
    if correctness_of(f, o, seed_point) is not Correctness.correct:
        return None

    found = []
    for offset in perturbation_ball(space, budget):
        neighbor = space.clamp(seed_point + offset * space.step)
        gamma = seed_point - neighbor
        if is_lambda_adversarial(f, o, neighbor, gamma, budget):
            found.append(Witness(tuple(neighbor.tolist()), tuple(gamma.tolist())))

    return min(found) if found else None
