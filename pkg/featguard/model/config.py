import pathlib
from typing import Dict, List, Optional, Tuple

import pydantic
from pydantic import BaseModel, BaseConfig, Field, validator

from featguard.common.constants import DEFAULT_RESTARTS, DEFAULT_STEPS
from featguard.core.space import DistortionBudget, NormKind
from featguard.extractors.color import DEFAULT_ANCHORS, DEFAULT_BACKGROUND, DEFAULT_BACKGROUND_TOLERANCE, RGB
from featguard.extractors.image import ImageSpace
from featguard.extractors.shape import DEFAULT_THRESHOLD, SHAPE_NAMES
from featguard.verifier.space import QuantizedSpace


class _Section(BaseModel):
    class Config(BaseConfig):
        extra = pydantic.Extra.forbid
        allow_population_by_field_name = True
        json_encoders = {
            pathlib.Path: str,
        }


class SpaceSection(_Section):
    # channel levels of the image grid attacks step on
    levels: int = Field(256, ge=2)
    # fixed grid for the theorem campaigns; every pipeline draws its own grid when unset
    dims: Optional[int] = Field(None, ge=1)
    lo: float = 0.0
    hi: float = 10.0
    step: float = Field(1.0, gt=0)

    @validator("hi")
    def _above_lo(cls, hi, values):
        if "lo" in values and hi <= values["lo"]:
            raise ValueError("hi must be greater than lo")
        return hi

    @validator("step")
    def _divides(cls, step, values):
        if "lo" in values and "hi" in values:
            spans = (values["hi"] - values["lo"]) / step
            if abs(spans - round(spans)) > 1e-6:
                raise ValueError("step must divide hi - lo")
        return step

    def image_space(self, width: int, height: int) -> ImageSpace:
        return ImageSpace(width, height, levels=self.levels)

    def grid(self) -> Optional[QuantizedSpace]:
        if self.dims is None:
            return None
        return QuantizedSpace.grid(self.dims, self.lo, self.hi, self.step)


class ColorSection(_Section):
    anchors: List[Tuple[str, RGB]] = DEFAULT_ANCHORS
    background: RGB = DEFAULT_BACKGROUND
    tolerance: float = Field(DEFAULT_BACKGROUND_TOLERANCE, ge=0)


class ShapeSection(_Section):
    shapes: List[str] = list(SHAPE_NAMES)
    threshold: float = Field(DEFAULT_THRESHOLD, ge=0)


class CatalogSection(_Section):
    path: Optional[pathlib.Path] = None
    # sign name -> (color, shape), overriding the default completions
    attributes: Dict[str, Tuple[str, str]] = {}

    @validator("path")
    def _exists(cls, path):
        if path is not None and not path.exists():
            raise ValueError(f"catalog file {path} doesn't exist")
        return path


class RenderSection(_Section):
    size: int = Field(32, ge=16)
    noise: float = Field(0.02, ge=0)


class BudgetSection(_Section):
    norm: NormKind = NormKind.linf
    lam: float = Field(0.05, alias="lambda", ge=0)

    @property
    def budget(self) -> DistortionBudget:
        return DistortionBudget(norm=self.norm, lam=self.lam)


class VerifierSection(_Section):
    # falls back to Settings.enumeration_cap
    cap: Optional[int] = Field(None, gt=0)
    seed: int = 0
    restarts: int = Field(DEFAULT_RESTARTS, ge=1)
    steps: int = Field(DEFAULT_STEPS, ge=1)


class CampaignSection(_Section):
    pipelines: int = Field(500, ge=1)
    arities: List[int] = [2, 3]
    labels_per_stage: int = Field(3, ge=2)
    max_points: int = Field(10_000, ge=8)
    flip_rate: float = Field(0.05, ge=0, le=1)
    remap_rate: float = Field(0.2, ge=0, le=1)
    nonsense_rate: float = Field(0.1, ge=0, lt=1)
    broken: bool = False
    norm: NormKind = NormKind.linf
    lam: float = Field(1.0, alias="lambda", ge=0)

    @validator("arities")
    def _positive(cls, arities):
        if not arities or any(n < 1 for n in arities):
            raise ValueError("arities must be a non-empty list of positive integers")
        return arities

    @property
    def budget(self) -> DistortionBudget:
        return DistortionBudget(norm=self.norm, lam=self.lam)


class PipelineConfig(_Section):
    space: SpaceSection = SpaceSection()
    color: ColorSection = ColorSection()
    shape: ShapeSection = ShapeSection()
    catalog: CatalogSection = CatalogSection()
    render: RenderSection = RenderSection()
    budget: BudgetSection = BudgetSection()
    verifier: VerifierSection = VerifierSection()
    campaign: CampaignSection = CampaignSection()
