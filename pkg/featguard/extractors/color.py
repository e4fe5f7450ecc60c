from typing import List, Tuple

import numpy as np
import pydantic
from pydantic import BaseModel, BaseConfig, validator

from featguard.core.labels import LabelSet
from featguard.core.space import NormKind
from featguard.extractors.base import Extraction, VotingExtractor

RGB = Tuple[float, float, float]

DEFAULT_ANCHORS: List[Tuple[str, RGB]] = [
    ("Red", (0.9, 0.1, 0.1)),
    ("Yellow", (0.95, 0.8, 0.1)),
    ("Blue", (0.1, 0.25, 0.75)),
    ("White", (0.95, 0.95, 0.95)),
]
DEFAULT_BACKGROUND: RGB = (0.5, 0.5, 0.5)
DEFAULT_BACKGROUND_TOLERANCE = 0.15


class ColorPalette(BaseModel):
    """Named anchor colours plus the declared background colour (not an anchor)."""
    anchors: List[Tuple[str, RGB]] = DEFAULT_ANCHORS
    background: RGB = DEFAULT_BACKGROUND

    class Config(BaseConfig):
        extra = pydantic.Extra.forbid

    @validator("anchors")
    def _distinct(cls, anchors):
        if len(anchors) < 2:
            raise ValueError("a palette needs at least two anchors")

        names = [name for name, _ in anchors]
        colors = [tuple(color) for _, color in anchors]
        if len(set(names)) != len(names) or len(set(colors)) != len(colors):
            raise ValueError("palette anchors must be pairwise distinct")

        for _, color in anchors:
            if any(channel < 0 or channel > 1 for channel in color):
                raise ValueError("anchor channels must lie in [0, 1]")
        return anchors

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self.anchors]

    @property
    def colors(self) -> np.ndarray:
        return np.asarray([color for _, color in self.anchors], dtype=float)

    def color_of(self, name: str) -> RGB:
        return dict(self.anchors)[name]


class DominantColorExtractor(VotingExtractor):
    """Plurality of nearest-anchor votes among pixels farther than ``tolerance`` from the background."""

    def __init__(self, palette: ColorPalette = ColorPalette(), tolerance: float = DEFAULT_BACKGROUND_TOLERANCE,
                 norm: NormKind = NormKind.linf, space=None):
        super().__init__(LabelSet(palette.names, namespace="color"), palette.background, norm=norm, space=space)
        self.palette = palette
        self.tolerance = tolerance
        self._anchors = palette.colors
        n = len(self._anchors)
        # the extra last state is "background": it votes for nothing
        self._votes = np.vstack([np.eye(n, dtype=np.int64), np.zeros((1, n), dtype=np.int64)])

    @property
    def n_states(self) -> int:
        return len(self._anchors) + 1

    @property
    def foreground_states(self) -> np.ndarray:
        return np.arange(self.n_states) < len(self._anchors)

    def _anchor_distances(self, colors: np.ndarray) -> np.ndarray:
        return np.linalg.norm(colors[:, None, :] - self._anchors[None, :, :], axis=-1)

    def pixel_states(self, colors: np.ndarray) -> np.ndarray:
        nearest = np.argmin(self._anchor_distances(colors), axis=1)
        return np.where(self.background_distance(colors) <= self.tolerance, len(self._anchors), nearest)

    def state_margins(self, colors: np.ndarray) -> np.ndarray:
        ordered = np.sort(self._anchor_distances(colors), axis=1)
        distance = self.background_distance(colors)
        boundary = np.abs(distance - self.tolerance)
        gap = (ordered[:, 1] - ordered[:, 0]) / 2
        return np.where(distance <= self.tolerance, boundary, np.minimum(gap, boundary))

    def score_table(self, n_pixels: int) -> np.ndarray:
        return np.broadcast_to(self._votes, (n_pixels, *self._votes.shape))


def extract_dominant_color(image, palette: ColorPalette = ColorPalette(), norm: NormKind = NormKind.linf) -> Extraction:
    return DominantColorExtractor(palette, norm=norm).extract(image)
