import os
from typing import Optional

from pydantic import BaseSettings, Field

from featguard.common.constants import DEFAULT_ENUMERATION_CAP, PACKAGE_NAME


class Settings(BaseSettings):
    enumeration_cap: int = Field(DEFAULT_ENUMERATION_CAP, gt=0)
    workers: Optional[int] = Field(None, gt=0)
    log_level: str = "WARNING"
    # when off, every elapsed_ms in a report is null and reruns are byte-identical
    record_timing: bool = True

    @property
    def resolved_workers(self) -> int:
        return self.workers or os.cpu_count() or 1

    class Config(BaseSettings.Config):
        env_prefix = f'{PACKAGE_NAME}_'
