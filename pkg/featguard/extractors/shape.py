import math
from typing import Callable, Dict, Sequence

import numpy as np
from PIL import Image, ImageDraw

from featguard.common.errors import ConfigurationError, DimensionMismatchError
from featguard.core.labels import LabelSet
from featguard.core.space import NormKind
from featguard.extractors.base import Extraction, VotingExtractor, as_image
from featguard.extractors.color import DEFAULT_BACKGROUND

DEFAULT_THRESHOLD = 0.3
SHAPE_NAMES = ("Octagon", "Diamond", "Square", "Triangle", "Circle", "Rectangle")


def _octagon(draw: ImageDraw.ImageDraw, c: float, size: int):
    r = 0.45 * size
    draw.polygon([(c + r * math.cos(math.pi / 8 + k * math.pi / 4), c + r * math.sin(math.pi / 8 + k * math.pi / 4))
                  for k in range(8)], fill=1)


def _diamond(draw: ImageDraw.ImageDraw, c: float, size: int):
    r = 0.45 * size
    draw.polygon([(c, c - r), (c + r, c), (c, c + r), (c - r, c)], fill=1)


def _square(draw: ImageDraw.ImageDraw, c: float, size: int):
    h = 0.35 * size
    draw.rectangle([c - h, c - h, c + h, c + h], fill=1)


def _triangle(draw: ImageDraw.ImageDraw, c: float, size: int):
    # point down, as a yield sign
    r = 0.45 * size
    draw.polygon([(c - r, c - 0.55 * r), (c + r, c - 0.55 * r), (c, c + 0.9 * r)], fill=1)


def _circle(draw: ImageDraw.ImageDraw, c: float, size: int):
    r = 0.38 * size
    draw.ellipse([c - r, c - r, c + r, c + r], fill=1)


def _rectangle(draw: ImageDraw.ImageDraw, c: float, size: int):
    w, h = 0.25 * size, 0.42 * size
    draw.rectangle([c - w, c - h, c + w, c + h], fill=1)


_DRAWERS: Dict[str, Callable[[ImageDraw.ImageDraw, float, int], None]] = {
    "Octagon": _octagon,
    "Diamond": _diamond,
    "Square": _square,
    "Triangle": _triangle,
    "Circle": _circle,
    "Rectangle": _rectangle,
}


def rasterize(name: str, size: int) -> np.ndarray:
    if name not in _DRAWERS:
        raise ConfigurationError("unknown shape {value}", value=name)

    canvas = Image.new("1", (size, size), 0)
    _DRAWERS[name](ImageDraw.Draw(canvas), (size - 1) / 2, size)
    return np.array(canvas, dtype=bool)


class ShapeTemplateSet:
    """Binary template masks of one size, one per shape label."""

    def __init__(self, names: Sequence[str], masks: np.ndarray):
        masks = np.asarray(masks, dtype=bool)
        if masks.ndim != 3 or masks.shape[0] != len(names) or masks.shape[1] != masks.shape[2]:
            raise ConfigurationError("templates must be square masks, one per name")

        flat = masks.reshape(len(names), -1)
        if not flat.any(axis=1).all():
            raise ConfigurationError("every template needs at least one foreground pixel")

        if len({row.tobytes() for row in flat}) != len(names):
            raise ConfigurationError("template masks must be pairwise distinct")

        self.labels = LabelSet(list(names), namespace="shape")
        self.masks = masks
        self.masks.setflags(write=False)

    @classmethod
    def default(cls, size: int, names: Sequence[str] = SHAPE_NAMES) -> "ShapeTemplateSet":
        return cls(names, np.stack([rasterize(name, size) for name in names]))

    @property
    def size(self) -> int:
        return int(self.masks.shape[1])

    def mask(self, name: str) -> np.ndarray:
        return self.masks[self.labels.label(name).id]


class ShapeExtractor(VotingExtractor):
    """Best template by Hamming agreement with the foreground mask.

    A pixel is foreground when its RGB distance from the background exceeds ``threshold``.
    """

    def __init__(self, templates: ShapeTemplateSet, background=DEFAULT_BACKGROUND,
                 threshold: float = DEFAULT_THRESHOLD, norm: NormKind = NormKind.linf, space=None):
        super().__init__(templates.labels, background, norm=norm, space=space)
        self.templates = templates
        self.threshold = threshold
        flat = templates.masks.reshape(len(templates.labels), -1)
        # votes[p, m, t] = 1 when mask value m at pixel p agrees with template t
        self._votes = np.stack([~flat.T, flat.T], axis=1).astype(np.int64)

    @property
    def n_states(self) -> int:
        return 2

    @property
    def foreground_states(self) -> np.ndarray:
        return np.array([False, True])

    def pixel_states(self, colors: np.ndarray) -> np.ndarray:
        return (self.background_distance(colors) > self.threshold).astype(np.int64)

    def state_margins(self, colors: np.ndarray) -> np.ndarray:
        return np.abs(self.background_distance(colors) - self.threshold)

    def score_table(self, n_pixels: int) -> np.ndarray:
        if n_pixels != self._votes.shape[0]:
            raise DimensionMismatchError("image has {value} pixels, templates have {key}",
                                         value=n_pixels, key=self._votes.shape[0])
        return self._votes

    def image(self, x):
        if self.space is None and not hasattr(x, "pixels"):
            return as_image(x, self.templates.size, self.templates.size)
        return super().image(x)

    def mask(self, x) -> np.ndarray:
        image = self.image(x)
        return self.pixel_states(image.pixels).astype(bool).reshape(image.height, image.width)

    def agreement(self, x) -> np.ndarray:
        """Normalised Hamming agreement with every template."""
        scores = self.scores(x)
        return scores / self._votes.shape[0]


def extract_shape(image, templates: ShapeTemplateSet, norm: NormKind = NormKind.linf) -> Extraction:
    return ShapeExtractor(templates, norm=norm).extract(image)
