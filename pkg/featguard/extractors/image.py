import pathlib
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from featguard.common.errors import ConfigurationError, DimensionMismatchError
from featguard.verifier.space import QuantizedSpace


class ImageInput:
    """Row-major RGB image with channels in [0, 1]."""

    def __init__(self, pixels):
        array = np.asarray(pixels, dtype=float)
        if array.ndim != 3 or array.shape[2] != 3 or array.shape[0] < 1 or array.shape[1] < 1:
            raise DimensionMismatchError("image must have shape (height, width, 3), got {value}", value=array.shape)

        if np.any(array < 0) or np.any(array > 1):
            raise DimensionMismatchError("image channels must lie in [0, 1]")

        self._array = array.copy()
        self._array.setflags(write=False)

    @classmethod
    def filled(cls, width: int, height: int, color) -> "ImageInput":
        return cls(np.broadcast_to(np.asarray(color, dtype=float), (height, width, 3)))

    @property
    def array(self) -> np.ndarray:
        return self._array

    @property
    def height(self) -> int:
        return int(self._array.shape[0])

    @property
    def width(self) -> int:
        return int(self._array.shape[1])

    @property
    def pixels(self) -> np.ndarray:
        """(width * height, 3) view, row-major."""
        return self._array.reshape(-1, 3)

    @property
    def vector(self) -> np.ndarray:
        return self._array.ravel()

    def quantized(self, levels: int = 256) -> "ImageInput":
        step = levels - 1
        return ImageInput(np.rint(self._array * step) / step)

    def __eq__(self, other):
        if not isinstance(other, ImageInput):
            return NotImplemented
        return self._array.shape == other._array.shape and bool(np.array_equal(self._array, other._array))

    def __repr__(self):
        return f"ImageInput({self.width}x{self.height})"


class ImageSpace(QuantizedSpace):
    """Images of a fixed size whose channels lie on the grid 0, 1/(levels-1), ..., 1."""

    def __init__(self, width: int, height: int, levels: int = 256):
        if width < 1 or height < 1 or levels < 2:
            raise ConfigurationError("image space needs positive size and at least two levels")

        dims = width * height * 3
        super().__init__(np.zeros(dims), np.ones(dims), 1.0 / (levels - 1))
        self.width = width
        self.height = height
        self.channel_levels = levels

    @property
    def channel_step(self) -> float:
        return 1.0 / (self.channel_levels - 1)

    def encode(self, x) -> np.ndarray:
        if isinstance(x, ImageInput):
            if (x.width, x.height) != (self.width, self.height):
                raise DimensionMismatchError("image is {value}, space expects {key}",
                                             value=f"{x.width}x{x.height}", key=f"{self.width}x{self.height}")
            return x.vector
        return super().encode(x)

    def decode(self, vector: np.ndarray) -> ImageInput:
        return ImageInput(np.asarray(vector, dtype=float).reshape(self.height, self.width, 3))

    def channel_grid(self) -> np.ndarray:
        """Every on-grid RGB colour, (levels ** 3, 3)."""
        axis = np.arange(self.channel_levels) * self.channel_step
        return np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)

    def describe(self) -> str:
        return f"{self.width}x{self.height} RGB images, {self.channel_levels} levels per channel"


def write_ppm(image: ImageInput, path: Union[str, pathlib.Path]):
    data = np.rint(image.array * 255).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path, format="PPM")


def read_ppm(path: Union[str, pathlib.Path]) -> ImageInput:
    path = pathlib.Path(path)
    try:
        with Image.open(path) as im:
            if im.format != "PPM" or im.mode != "RGB":
                raise ConfigurationError("{path} is not an 8-bit RGB PPM image", path=path)
            data = np.asarray(im, dtype=np.uint8)

    except (FileNotFoundError, UnidentifiedImageError):
        raise ConfigurationError("can not read image {path}", path=path)

    return ImageInput(data.astype(float) / 255)
