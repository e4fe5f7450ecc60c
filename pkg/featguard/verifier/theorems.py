"""Exhaustive checks of the serial and parallel composition theorems.

A composition G(<F_1(x), ..., F_n(x)>) is λ-resilient under three hypotheses:

* every F_i is λ-resilient against its oracle on the space,
* G agrees with its oracle O_G on every stage-one label tuple,
* O_G is injective, so that the catalog direction O_L is its inverse.

Each hypothesis is established by enumeration before the composition itself is searched; a failing hypothesis
is reported by kind and the composition is not searched.
"""
import time
from typing import List, Optional, Sequence

import numpy as np

from featguard.common.constants import DEFAULT_ENUMERATION_CAP
from featguard.common.errors import ConfigurationError, HypothesisError
from featguard.common.log import get_logger
from featguard.composition.compose import LabelTable, compose_oracles, parallel_compose
from featguard.core.space import DistortionBudget
from featguard.core.table import tabulate
from featguard.model.report import HypothesisFailure, HypothesisKind, TheoremReport, TheoremVerdict
from featguard.verifier.enumerate import scan_tables
from featguard.verifier.space import QuantizedSpace

logger = get_logger(__name__)


def _stage_two_failures(g, o_g: LabelTable) -> List[HypothesisFailure]:
    if not isinstance(g, LabelTable) or not isinstance(o_g, LabelTable):
        raise ConfigurationError("theorem checks need label-valued stage-two tables")

    failures = []
    if not g.agrees_with(o_g):
        disagreeing = int(np.count_nonzero((o_g.table != g.table) & (o_g.table >= 0)))
        failures.append(HypothesisFailure(kind=HypothesisKind.stage_two_disagrees,
                                          detail=f"G differs from O_G on {disagreeing} label tuples"))

    if not o_g.is_injective():
        failures.append(HypothesisFailure(kind=HypothesisKind.oracle_not_injective,
                                          detail="two label tuples share one O_G output, so O_L is not its inverse"))
    return failures


def verify_parallel_theorem(fs: Sequence, g: LabelTable, oracles: Sequence, o_g: LabelTable, space: QuantizedSpace,
                            budget: DistortionBudget, cap: int = DEFAULT_ENUMERATION_CAP, workers: int = 1,
                            strict: bool = False) -> TheoremReport:
    """Check that G(<F_1, ..., F_n>) has an empty λ-adversarial set on ``space``.

    The composed oracle is O_R(x) = O_G(O_F1(x), ..., O_Fn(x)). With ``strict`` an unverified hypothesis raises
    ``HypothesisError`` instead of being reported.
    """
    if len(fs) != len(oracles):
        raise ConfigurationError("{value} extractors but {key} oracles", value=len(fs), key=len(oracles))

    started = time.perf_counter()
    examined = 0
    failures: List[HypothesisFailure] = []
    for stage, (f, o) in enumerate(zip(fs, oracles)):
        scan = scan_tables(tabulate(f, space), tabulate(o, space), space, budget, cap=cap, workers=workers)
        examined += scan.pairs_examined
        if scan.witnesses:
            failures.append(HypothesisFailure(
                kind=HypothesisKind.stage_one_not_resilient, stage=stage, witness=scan.witnesses[0].model(),
                detail=f"extractor {stage} has {len(scan.witnesses)} adversarial pairs",
            ))

    failures.extend(_stage_two_failures(g, o_g))
    if failures and strict:
        raise HypothesisError("composition theorem hypothesis does not hold: {value}", value=failures[0].detail)

    counterexamples = []
    if not failures:
        composed = parallel_compose(fs, g)
        oracle = compose_oracles(oracles, o_g)
        scan = scan_tables(tabulate(composed, space), tabulate(oracle, space), space, budget, cap=cap,
                           workers=workers)
        examined += scan.pairs_examined
        counterexamples = [witness.model() for witness in scan.witnesses]
        if counterexamples:
            logger.error("composition of %d extractors has %d adversarial pairs", len(fs), len(counterexamples))

    if failures:
        verdict = TheoremVerdict.hypothesis_failed

    else:
        verdict = TheoremVerdict.counterexample if counterexamples else TheoremVerdict.holds

    return TheoremReport(
        verdict=verdict,
        arity=len(fs),
        domain=space.describe(),
        budget=budget,
        hypothesis_failures=failures,
        counterexamples=counterexamples,
        points_examined=examined,
        elapsed_ms=(time.perf_counter() - started) * 1000,
    )


def verify_serial_theorem(f, g: LabelTable, o_f, o_g: LabelTable, space: QuantizedSpace, budget: DistortionBudget,
                          cap: int = DEFAULT_ENUMERATION_CAP, workers: int = 1, strict: bool = False) -> TheoremReport:
    """Check that G(F(x)) has an empty λ-adversarial set on ``space``, with O_R(x) = O_G(O_F(x))."""
    return verify_parallel_theorem([f], g, [o_f], o_g, space, budget, cap=cap, workers=workers, strict=strict)


def first_witness(report: TheoremReport, stage: Optional[int] = None) -> Optional[HypothesisFailure]:
    """The first stage-one hypothesis failure carrying an adversarial witness, optionally of one ``stage``."""
    return next((failure for failure in report.hypothesis_failures
                 if failure.witness is not None and failure.kind is HypothesisKind.stage_one_not_resilient
                 and stage in (None, failure.stage)), None)
