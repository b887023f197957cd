"""Core interfaces for adapters."""

from abc import ABC, abstractmethod
from pathlib import Path

import numpy as np


class Restorer(ABC):
    """Anything that maps a blurry (N, 3, H, W) image to a full-resolution estimate."""

    @abstractmethod
    def restore(self, blurry: np.ndarray) -> np.ndarray:
        """Return the deblurred image with the input's shape."""
        pass


class ImageCodec(ABC):
    """Interface for reading and writing (1, 3, H, W) images in [0, 1]."""

    @abstractmethod
    def decode(self, path: Path) -> np.ndarray:
        """Read an image file."""
        pass

    @abstractmethod
    def encode(self, image: np.ndarray, path: Path) -> None:
        """Write an image file, quantizing to the codec's bit depth."""
        pass
