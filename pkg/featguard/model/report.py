import json
from enum import Enum
from typing import Any, Dict, List, Optional

import pydantic
from pydantic import BaseModel, BaseConfig, root_validator

from featguard.core.certificate import CertificateStatus
from featguard.core.space import DistortionBudget


class _Report(BaseModel):
    class Config(BaseConfig):
        extra = pydantic.Extra.forbid
        allow_population_by_field_name = True


class Verdict(str, Enum):
    resilient = "RESILIENT"
    adversarial_found = "ADVERSARIAL_FOUND"
    budget_exhausted = "BUDGET_EXHAUSTED"


class WitnessModel(_Report):
    """An input ``x`` and the distortion ``gamma`` exhibiting the adversarial condition."""
    x: List[float]
    gamma: List[float]


class AdversarialReport(_Report):
    verdict: Verdict
    witness: Optional[WitnessModel] = None
    witnesses: int = 0
    points_examined: int = 0
    domain: str = ""
    seed: Optional[int] = None
    config_digest: Optional[str] = None
    elapsed_ms: Optional[float] = None

    @root_validator(skip_on_failure=True)
    def _witness_iff_found(cls, values):
        found = values["verdict"] is Verdict.adversarial_found
        if found != (values.get("witness") is not None):
            raise ValueError("a witness is reported exactly when an adversarial input was found")
        return values


class HypothesisKind(str, Enum):
    stage_one_not_resilient = "STAGE_ONE_NOT_RESILIENT"
    stage_two_disagrees = "STAGE_TWO_DISAGREES_WITH_ORACLE"
    oracle_not_injective = "STAGE_TWO_ORACLE_NOT_INJECTIVE"


class HypothesisFailure(_Report):
    kind: HypothesisKind
    detail: str
    stage: Optional[int] = None
    witness: Optional[WitnessModel] = None


class TheoremVerdict(str, Enum):
    holds = "HOLDS"
    counterexample = "COUNTEREXAMPLE"
    hypothesis_failed = "HYPOTHESIS_FAILED"


class TheoremReport(_Report):
    """Outcome of one exhaustive composition check.

    Counterexamples are only searched for when every hypothesis holds.
    """
    verdict: TheoremVerdict
    arity: int
    domain: str
    budget: DistortionBudget
    hypothesis_failures: List[HypothesisFailure] = []
    counterexamples: List[WitnessModel] = []
    points_examined: int = 0
    elapsed_ms: Optional[float] = None


class CampaignReport(_Report):
    theorem: str
    arity: int
    pipelines: int
    seed: int
    holds: int = 0
    counterexamples: int = 0
    hypothesis_failures: int = 0
    broken_pipelines: int = 0
    broken_witnessed: int = 0
    samples: List[TheoremReport] = []
    elapsed_ms: Optional[float] = None


class AugmentationTrace(_Report):
    base: List[float]
    masked: List[float]
    label: Optional[str] = None
    fallback: bool = False
    abstained: bool = False


class ItemReport(_Report):
    name: str
    verdict: str
    features: List[str] = []
    candidates: Optional[str] = None
    status: Optional[CertificateStatus] = None
    radius: Optional[float] = None
    extractor_radii: Dict[str, float] = {}
    attack_mode: Optional[str] = None
    witness: Optional[WitnessModel] = None
    distance: Optional[float] = None
    augmentation: Optional[AugmentationTrace] = None
    detail: Optional[str] = None


class RunReport(_Report):
    command: str
    version: str
    config_digest: str
    seed: int
    budget: DistortionBudget
    items: List[ItemReport] = []
    campaigns: List[CampaignReport] = []
    counts: Dict[str, int] = {}
    metrics: Dict[str, float] = {}
    elapsed_ms: Optional[float] = None


def _strip_timing(data: Any) -> Any:
    if isinstance(data, dict):
        return {key: None if key == "elapsed_ms" else _strip_timing(value) for key, value in data.items()}

    if isinstance(data, list):
        return [_strip_timing(value) for value in data]

    return data


def dumps_report(report: _Report, record_timing: bool = True) -> str:
    """Sorted, indented JSON; ``elapsed_ms`` is nulled everywhere unless ``record_timing``."""
    data = json.loads(report.json(by_alias=True))
    if not record_timing:
        data = _strip_timing(data)
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
