import math
from typing import Union

import numpy as np

from featguard.common.errors import ConfigurationError, DimensionMismatchError
from featguard.core.space import ArrayLike, InputSpace

_GRID_TOLERANCE = 1e-9


class QuantizedSpace(InputSpace):
    """Input space restricted to the grid lo, lo + step, ..., hi in every dimension."""

    def __init__(self, lo: ArrayLike, hi: ArrayLike, step: Union[float, ArrayLike]):
        super().__init__(lo, hi)
        self.step = np.broadcast_to(np.asarray(step, dtype=float), self.lo.shape).copy()
        if np.any(self.step <= 0):
            raise ConfigurationError("quantization step must be positive")

        spans = (self.hi - self.lo) / self.step
        counts = np.rint(spans)
        if np.any(np.abs(spans - counts) > 1e-6):
            raise ConfigurationError("quantization step must divide hi - lo in every dimension")

        self.levels = counts.astype(np.int64) + 1

    @classmethod
    def grid(cls, dims: int, lo: float, hi: float, step: float) -> "QuantizedSpace":
        return cls(np.full(dims, lo), np.full(dims, hi), step)

    @property
    def size(self) -> int:
        return math.prod(int(n) for n in self.levels)

    @property
    def shape(self) -> tuple:
        return tuple(int(n) for n in self.levels)

    def coords_of(self, x: ArrayLike) -> np.ndarray:
        """Integer grid coordinates of an on-grid vector."""
        vector = np.asarray(x, dtype=float).ravel()
        self.check_dims(vector)
        raw = (vector - self.lo) / self.step
        coords = np.rint(raw)
        if np.any(np.abs(raw - coords) > _GRID_TOLERANCE) or np.any(coords < 0) or np.any(coords >= self.levels):
            raise DimensionMismatchError("input {key} is not a point of the quantized space", key=vector.tolist())
        return coords.astype(np.int64)

    def index_of(self, x: ArrayLike) -> int:
        return int(np.ravel_multi_index(tuple(self.coords_of(x)), self.shape))

    def point(self, index: int) -> np.ndarray:
        coords = np.array(np.unravel_index(index, self.shape))
        return self.lo + coords * self.step

    def all_coords(self) -> np.ndarray:
        """(size, dims) integer coordinates in flat-index order."""
        grids = np.indices(self.shape).reshape(self.dims, -1)
        return grids.T.copy()

    def points(self) -> np.ndarray:
        return self.lo + self.all_coords() * self.step

    def snap(self, x: ArrayLike) -> np.ndarray:
        """Nearest grid point."""
        vector = self.clamp(np.asarray(x, dtype=float).ravel())
        return self.lo + np.rint((vector - self.lo) / self.step) * self.step

    def same_grid(self, other) -> bool:
        return (isinstance(other, QuantizedSpace) and other.shape == self.shape
                and np.allclose(other.lo, self.lo) and np.allclose(other.step, self.step))

    def describe(self) -> str:
        return f"{self.dims}-d grid, {self.size} points"

