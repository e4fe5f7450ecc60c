import abc
import math
from enum import Enum
from typing import NamedTuple, Optional, Sequence

import numpy as np
import pydantic
from pydantic import BaseModel, BaseConfig, Field

from featguard.common.errors import NoForegroundError
from featguard.core.certificate import CertificateStatus, Provenance, ResilienceCertificate
from featguard.core.labels import Label, LabelSet
from featguard.core.space import DistortionBudget, NormKind
from featguard.extractors.image import ImageInput


class CertificateMethod(str, Enum):
    pixel_boundary = "PixelBoundary"
    vote_margin = "VoteMargin"


class MarginCertificate(BaseModel):
    """Output provably unchanged for every distortion with norm below ``certified_radius``."""
    certified_radius: float = Field(..., ge=0)
    method: CertificateMethod
    norm: NormKind
    pixel_boundary_radius: float = Field(..., ge=0)
    vote_margin_radius: float = Field(..., ge=0)

    class Config(BaseConfig):
        extra = pydantic.Extra.forbid
        allow_mutation = False


class Extraction(NamedTuple):
    label: Label
    certificate: MarginCertificate


def rgb_scale(norm: NormKind) -> float:
    """Factor turning a per-pixel RGB (L2) margin into a radius under ``norm`` over the whole image.

    Linf moves one pixel by up to √3·λ in RGB; under L1 and L2 a pixel moves by at most λ.
    """
    return 1 / math.sqrt(3) if NormKind(norm) is NormKind.linf else 1.0


def as_image(x, width: Optional[int] = None, height: Optional[int] = None) -> ImageInput:
    if isinstance(x, ImageInput):
        return x

    vector = np.asarray(x, dtype=float).ravel()
    if width is None or height is None:
        side = math.isqrt(vector.size // 3)
        width = height = side
    return ImageInput(vector.reshape(height, width, 3))


class VotingExtractor(abc.ABC):
    """Feature extractor deciding by additive per-pixel votes.

    Each pixel is mapped to a discrete state from its colour alone; a state at pixel p adds
    ``score_table[p, state]`` to the per-label totals, and the label is the lowest-index argmax. Inputs with no
    pixel in a foreground state have no label.
    """

    def __init__(self, labels: LabelSet, background, norm: NormKind = NormKind.linf, space=None):
        self.labels = labels
        self.background = np.asarray(background, dtype=float)
        self.norm = NormKind(norm)
        self.space = space

    @property
    @abc.abstractmethod
    def n_states(self) -> int:
        ...

    @property
    @abc.abstractmethod
    def foreground_states(self) -> np.ndarray:
        """(n_states,) bool."""

    @abc.abstractmethod
    def pixel_states(self, colors: np.ndarray) -> np.ndarray:
        """State of every (n, 3) colour."""

    @abc.abstractmethod
    def state_margins(self, colors: np.ndarray) -> np.ndarray:
        """RGB (L2) distance each colour can move without its state changing."""

    @abc.abstractmethod
    def score_table(self, n_pixels: int) -> np.ndarray:
        """(n_pixels, n_states, n_labels) integer votes."""

    def image(self, x) -> ImageInput:
        if isinstance(x, ImageInput) or self.space is None:
            return as_image(x)
        return self.space.decode(np.asarray(x, dtype=float).ravel())

    def background_distance(self, colors: np.ndarray) -> np.ndarray:
        return np.linalg.norm(colors - self.background, axis=-1)

    def tally(self, states: np.ndarray) -> np.ndarray:
        table = self.score_table(states.size)
        return table[np.arange(states.size), states].sum(axis=0)

    def scores(self, x) -> np.ndarray:
        image = self.image(x)
        return self.tally(self.pixel_states(image.pixels)).astype(float)

    def decide(self, states: np.ndarray) -> int:
        if not np.any(self.foreground_states[states]):
            raise NoForegroundError("no foreground pixel for the {key} extractor", key=self.labels.namespace)
        return int(np.argmax(self.tally(states)))

    def __call__(self, x) -> Label:
        image = self.image(x)
        return self.labels[self.decide(self.pixel_states(image.pixels))]

    def extract(self, x, norm: Optional[NormKind] = None) -> Extraction:
        image = self.image(x)
        pixels = image.pixels
        states = self.pixel_states(pixels)
        winner = self.decide(states)
        totals = self.tally(states)
        norm = NormKind(norm or self.norm)

        margins = self.state_margins(pixels) * rgb_scale(norm)
        pixel_boundary = float(margins.min())
        # emptying the foreground needs every foreground pixel to change
        empty_bound = float(margins[self.foreground_states[states]].max())

        others = np.delete(totals, winner)
        margin = int(totals[winner] - others.max()) if others.size else None
        if margin == 0:
            certificate = MarginCertificate(certified_radius=0.0, method=CertificateMethod.vote_margin, norm=norm,
                                            pixel_boundary_radius=pixel_boundary, vote_margin_radius=0.0)
            return Extraction(self.labels[winner], certificate)

        # each changed pixel moves any pairwise vote difference by at most 2
        needed = math.ceil(margin / 2) if margin is not None else margins.size + 1
        ordered = np.sort(margins)
        vote = float(ordered[needed - 1]) if needed <= ordered.size else math.inf
        vote = min(vote, empty_bound)
        if vote > pixel_boundary:
            certified, method = vote, CertificateMethod.vote_margin

        else:
            certified, method = pixel_boundary, CertificateMethod.pixel_boundary

        certificate = MarginCertificate(certified_radius=certified, method=method, norm=norm,
                                        pixel_boundary_radius=pixel_boundary, vote_margin_radius=vote)
        return Extraction(self.labels[winner], certificate)


def certify_at(extractor: VotingExtractor, x, budget: DistortionBudget) -> ResilienceCertificate:
    """CERTIFIED when the margin radius strictly exceeds λ (or λ = 0); UNDECIDED otherwise."""
    radius = extractor.extract(x, norm=budget.norm).certificate.certified_radius
    return _certificate(radius, budget, f"{extractor.labels.namespace} extractor at one input")


def certify_composed(extractors: Sequence[VotingExtractor], x, budget: DistortionBudget) -> ResilienceCertificate:
    """The feature tuple, hence any stage-two output, is stable while every extractor is."""
    radius = min(e.extract(x, norm=budget.norm).certificate.certified_radius for e in extractors)
    names = "+".join(e.labels.namespace for e in extractors)
    return _certificate(radius, budget, f"{names} pipeline at one input")


def _certificate(radius: float, budget: DistortionBudget, domain: str) -> ResilienceCertificate:
    certified = budget.lam == 0 or radius > budget.lam
    return ResilienceCertificate(
        status=CertificateStatus.certified if certified else CertificateStatus.undecided,
        budget=budget, provenance=Provenance.margin, domain=domain, radius=radius,
    )
