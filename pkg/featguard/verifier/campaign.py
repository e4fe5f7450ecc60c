"""Seeded random table pipelines and the theorem campaigns run over them.

Every pipeline draws from its own child of one ``SeedSequence``, so a campaign is reproducible from its seed alone
and independent of the worker count.
"""
import math
import time
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from rich.progress import Progress

from featguard.common.console import log_console
from featguard.common.constants import DEFAULT_ENUMERATION_CAP, NONSENSE_ID
from featguard.common.log import get_logger
from featguard.composition.compose import LabelTable
from featguard.core.classifier import is_lambda_adversarial
from featguard.core.labels import LabelSet
from featguard.core.space import DistortionBudget
from featguard.core.table import TableClassifier, TableOracle
from featguard.model.config import CampaignSection
from featguard.model.report import CampaignReport, TheoremReport, TheoremVerdict
from featguard.verifier.enumerate import adversarial_points, perturbation_ball
from featguard.verifier.space import QuantizedSpace
from featguard.verifier.theorems import first_witness, verify_parallel_theorem

logger = get_logger(__name__)

MAX_SAMPLES = 5


class RandomPipeline(NamedTuple):
    space: QuantizedSpace
    extractors: List[TableClassifier]
    oracles: List[TableOracle]
    stage_two: LabelTable
    stage_two_oracle: LabelTable
    broken: Optional[int] = None


def random_space(rng: np.random.Generator, max_points: int) -> QuantizedSpace:
    dims = int(rng.integers(1, 4))
    side = max(3, math.floor(max_points ** (1 / dims) + 1e-9))
    levels = rng.integers(3, side + 1, size=dims)
    return QuantizedSpace(np.zeros(dims), (levels - 1).astype(float), 1.0)


def random_oracle(rng: np.random.Generator, space: QuantizedSpace, labels: LabelSet,
                  nonsense_rate: float) -> TableOracle:
    """Blocky ground truth: square blocks of a random side share one label, some blocks are nonsense."""
    block = int(rng.integers(2, 5))
    block_shape = tuple(math.ceil(n / block) for n in space.shape)
    block_labels = rng.integers(len(labels), size=block_shape)
    block_labels[rng.random(block_shape) < nonsense_rate] = NONSENSE_ID
    coords = space.all_coords() // block
    return TableOracle(space, labels, block_labels[tuple(coords.T)])


def random_extractor(rng: np.random.Generator, oracle: TableOracle, flip_rate: float, remap_rate: float) -> np.ndarray:
    """The oracle's table with random errors: point flips and, sometimes, one whole class relabelled."""
    truth = oracle.table
    k = len(oracle.labels)
    table = np.where(truth == NONSENSE_ID, rng.integers(k, size=truth.size), truth)
    if rng.random() < remap_rate:
        source = int(rng.integers(k))
        table = np.where(truth == source, (source + int(rng.integers(1, k))) % k, table)

    flips = rng.random(truth.size) < flip_rate
    return np.where(flips, (table + rng.integers(1, k, size=truth.size)) % k, table)


def repair(table: np.ndarray, oracle: TableOracle, budget: DistortionBudget, cap: int = DEFAULT_ENUMERATION_CAP,
           workers: int = 1) -> np.ndarray:
    """Correct adversarial points until none is left; each round strictly shrinks the incorrect set."""
    table = table.copy()
    while True:
        points = adversarial_points(table, oracle.table, oracle.space, budget, cap=cap, workers=workers)
        if points.size == 0:
            return table
        table[points] = oracle.table[points]


def break_extractor(rng: np.random.Generator, table: np.ndarray, oracle: TableOracle,
                    budget: DistortionBudget, attempts: int = 64) -> Optional[np.ndarray]:
    """Plant one adversarial pair: x misclassified next to a correctly classified neighbour of the same label."""
    space = oracle.space
    offsets = perturbation_ball(space, budget)
    offsets = offsets[np.any(offsets != 0, axis=1)]
    natural = np.flatnonzero(oracle.table != NONSENSE_ID)
    if offsets.shape[0] == 0 or natural.size == 0:
        return None

    k = len(oracle.labels)
    for _ in range(attempts):
        x = int(rng.choice(natural))
        coords = np.clip(np.array(np.unravel_index(x, space.shape)) + offsets[rng.integers(offsets.shape[0])],
                         0, space.levels - 1)
        y = int(np.ravel_multi_index(tuple(coords), space.shape))
        if y == x or oracle.table[y] != oracle.table[x]:
            continue

        broken = table.copy()
        broken[y] = oracle.table[y]
        broken[x] = (oracle.table[x] + int(rng.integers(1, k))) % k
        return broken

    return None


def random_pipeline(rng: np.random.Generator, arity: int, section: CampaignSection, budget: DistortionBudget,
                    cap: int = DEFAULT_ENUMERATION_CAP, workers: int = 1,
                    space: Optional[QuantizedSpace] = None) -> RandomPipeline:
    space = space if space is not None else random_space(rng, section.max_points)
    input_sets = [LabelSet([f"y{j}" for j in range(section.labels_per_stage)], namespace=f"f{i}")
                  for i in range(arity)]

    oracles, tables = [], []
    for labels in input_sets:
        oracle = random_oracle(rng, space, labels, section.nonsense_rate)
        table = random_extractor(rng, oracle, section.flip_rate, section.remap_rate)
        oracles.append(oracle)
        tables.append(repair(table, oracle, budget, cap=cap, workers=workers))

    broken = None
    if section.broken:
        stage = int(rng.integers(arity))
        planted = break_extractor(rng, tables[stage], oracles[stage], budget)
        if planted is not None:
            tables[stage], broken = planted, stage

    sizes = [len(labels) for labels in input_sets]
    outputs = LabelSet([f"z{i}" for i in range(math.prod(sizes))], namespace="out")
    injective = rng.permutation(len(outputs)).reshape(sizes)
    o_g = LabelTable(input_sets, outputs, injective)
    g = LabelTable(input_sets, outputs, injective)

    extractors = [TableClassifier(space, labels, table) for labels, table in zip(input_sets, tables)]
    return RandomPipeline(space, extractors, oracles, g, o_g, broken)


def _witnessed(pipeline: RandomPipeline, report: TheoremReport, budget: DistortionBudget) -> bool:
    failure = first_witness(report, stage=pipeline.broken)
    if failure is None:
        return False

    f, o = pipeline.extractors[failure.stage], pipeline.oracles[failure.stage]
    return is_lambda_adversarial(f, o, np.asarray(failure.witness.x), np.asarray(failure.witness.gamma), budget)


def run_campaign(theorem: str, arity: int, section: CampaignSection, seed: int, budget: Optional[DistortionBudget] = None,
                 cap: int = DEFAULT_ENUMERATION_CAP, workers: int = 1, pipelines: Optional[int] = None,
                 space: Optional[QuantizedSpace] = None) -> CampaignReport:
    budget = budget or section.budget
    count = pipelines or section.pipelines
    started = time.perf_counter()
    report = CampaignReport(theorem=theorem, arity=arity, pipelines=count, seed=seed)
    children = np.random.SeedSequence([seed, arity]).spawn(count)
    with Progress(console=log_console, transient=True, disable=not log_console.is_terminal) as progress:
        task = progress.add_task(f"{theorem} theorem, {arity} extractor(s)", total=count)
        for child in children:
            pipeline = random_pipeline(np.random.default_rng(child), arity, section, budget, cap=cap,
                                       workers=workers, space=space)
            result = verify_parallel_theorem(pipeline.extractors, pipeline.stage_two, pipeline.oracles,
                                             pipeline.stage_two_oracle, pipeline.space, budget, cap=cap,
                                             workers=workers)
            if result.verdict is TheoremVerdict.holds:
                report.holds += 1

            else:
                report.counterexamples += len(result.counterexamples)
                report.hypothesis_failures += len(result.hypothesis_failures)
                if len(report.samples) < MAX_SAMPLES:
                    report.samples.append(result)

            if pipeline.broken is not None:
                report.broken_pipelines += 1
                report.broken_witnessed += _witnessed(pipeline, result, budget)

            progress.advance(task)

    report.elapsed_ms = (time.perf_counter() - started) * 1000
    logger.info("%s campaign: %d pipelines, %d counterexamples, %d hypothesis failures", theorem, count,
                report.counterexamples, report.hypothesis_failures)
    return report


def run_serial_campaign(section: CampaignSection, seed: int, budget: Optional[DistortionBudget] = None,
                        cap: int = DEFAULT_ENUMERATION_CAP, workers: int = 1,
                        pipelines: Optional[int] = None, space: Optional[QuantizedSpace] = None) -> CampaignReport:
    return run_campaign("serial", 1, section, seed, budget=budget, cap=cap, workers=workers, pipelines=pipelines,
                        space=space)


def run_parallel_campaign(section: CampaignSection, seed: int, arities: Optional[Sequence[int]] = None,
                          budget: Optional[DistortionBudget] = None, cap: int = DEFAULT_ENUMERATION_CAP,
                          workers: int = 1, pipelines: Optional[int] = None,
                          space: Optional[QuantizedSpace] = None) -> List[CampaignReport]:
    return [run_campaign("parallel", arity, section, seed, budget=budget, cap=cap, workers=workers,
                         pipelines=pipelines, space=space)
            for arity in (arities or section.arities)]
