from enum import Enum
from typing import Optional

import pydantic
from pydantic import BaseModel, BaseConfig

from featguard.core.space import DistortionBudget


class CertificateStatus(str, Enum):
    certified = "CERTIFIED"
    undecided = "UNDECIDED"
    # exhaustive search only: a witness exists on the domain
    refuted = "REFUTED"


class Provenance(str, Enum):
    margin = "margin"
    exhaustive = "exhaustive"


class ResilienceCertificate(BaseModel):
    """No output change within ``budget`` on ``domain``.

    UNDECIDED never claims the input is attackable; it only means the method could not prove resilience.
    REFUTED comes from exhaustive search alone and always has a witness behind it.
    """
    status: CertificateStatus
    budget: DistortionBudget
    provenance: Provenance
    domain: str
    radius: Optional[float] = None

    class Config(BaseConfig):
        extra = pydantic.Extra.forbid

    @property
    def certified(self) -> bool:
        return self.status is CertificateStatus.certified
