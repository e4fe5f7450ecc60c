from enum import Enum
from typing import Sequence, Union

import numpy as np
import pydantic
from pydantic import BaseModel, BaseConfig, Field

from featguard.common.constants import NORM_TOLERANCE
from featguard.common.errors import ConfigurationError, DimensionMismatchError

ArrayLike = Union[np.ndarray, Sequence[float]]


class NormKind(str, Enum):
    l1 = "l1"
    l2 = "l2"
    linf = "linf"

    @property
    def ord(self) -> float:
        return {NormKind.l1: 1, NormKind.l2: 2, NormKind.linf: np.inf}[self]


class DistortionBudget(BaseModel):
    norm: NormKind = NormKind.linf
    lam: float = Field(0.0, alias="lambda", ge=0)

    class Config(BaseConfig):
        extra = pydantic.Extra.forbid
        allow_population_by_field_name = True
        allow_mutation = False

    def admits(self, gamma: ArrayLike) -> bool:
        return norm_of(gamma, self.norm) <= self.lam + NORM_TOLERANCE

    def __str__(self):
        return f"{self.norm.value} ≤ {self.lam:g}"


def norm_of(gamma: ArrayLike, norm: NormKind) -> float:
    vector = np.asarray(gamma, dtype=float).ravel()
    if vector.size == 0:
        return 0.0
    return float(np.linalg.norm(vector, ord=NormKind(norm).ord))


class InputSpace:
    """Box of legal inputs: one closed range per dimension."""

    def __init__(self, lo: ArrayLike, hi: ArrayLike):
        self.lo = np.asarray(lo, dtype=float).ravel()
        self.hi = np.asarray(hi, dtype=float).ravel()
        if self.lo.size < 1 or self.lo.shape != self.hi.shape:
            raise ConfigurationError("input space needs matching lo/hi bounds of dimension ≥ 1")

        if np.any(self.lo > self.hi):
            raise ConfigurationError("input space has a dimension with lo > hi")

    @classmethod
    def uniform(cls, dims: int, lo: float, hi: float) -> "InputSpace":
        return cls(np.full(dims, lo), np.full(dims, hi))

    @property
    def dims(self) -> int:
        return int(self.lo.size)

    def check_dims(self, vector: np.ndarray, what: str = "input"):
        if vector.shape != (self.dims,):
            raise DimensionMismatchError("{key} has dimension {value}, space has {label}",
                                         key=what, value=vector.size, label=self.dims)

    def contains(self, x: ArrayLike) -> bool:
        vector = np.asarray(x, dtype=float).ravel()
        return vector.shape == (self.dims,) and bool(np.all((vector >= self.lo) & (vector <= self.hi)))

    def clamp(self, x: ArrayLike) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lo, self.hi)

    def encode(self, x) -> np.ndarray:
        """Flat vector view of an input of this space."""
        vector = np.asarray(x, dtype=float).ravel()
        self.check_dims(vector)
        return vector

    def decode(self, vector: np.ndarray):
        """Inverse of ``encode``: the object classifiers of this space accept."""
        return vector


def apply_distortion(x, gamma: ArrayLike, space: InputSpace):
    """x + γ, saturated to the per-dimension bounds of ``space``.

    The result has the same form as ``x`` (a vector, or e.g. an image for image spaces).
    """
    vector = space.encode(x)
    delta = np.asarray(gamma, dtype=float).ravel()
    space.check_dims(delta, what="distortion")
    return space.decode(space.clamp(vector + delta))


def check_same_space(spaces: Sequence[InputSpace]):
    first = spaces[0]
    for other in spaces[1:]:
        if other.dims != first.dims or not (np.allclose(other.lo, first.lo) and np.allclose(other.hi, first.hi)):
            raise ConfigurationError("classifiers do not share one input space")
