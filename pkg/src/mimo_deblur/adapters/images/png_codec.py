"""8-bit RGB PNG decoding and encoding with Pillow."""

from pathlib import Path

import numpy as np
from PIL import Image

from mimo_deblur.core.errors import InputError
from mimo_deblur.core.interfaces import ImageCodec

IMAGE_SUFFIXES = (".png",)


def list_images(directory: Path) -> list[Path]:
    """PNG files directly inside ``directory``, sorted by name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InputError(f"Not a directory: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


class PngCodec(ImageCodec):
    """Maps 8-bit RGB files to (1, 3, H, W) float32 arrays in [0, 1] and back."""

    def decode(self, path: Path) -> np.ndarray:
        path = Path(path)
        if not path.exists():
            raise InputError(f"Image not found: {path}")
        with Image.open(path) as img:
            pixels = np.asarray(img.convert("RGB"), dtype=np.uint8)
        chw = pixels.transpose(2, 0, 1)[np.newaxis]
        return (chw.astype(np.float32) / np.float32(255.0)).astype(np.float32)

    def encode(self, image: np.ndarray, path: Path) -> None:
        """Scale by 255, round half away from zero, clamp to [0, 255] and save."""
        image = np.asarray(image)
        if image.ndim == 4:
            if image.shape[0] != 1:
                raise InputError(f"Can only encode a single image, got batch of {image.shape[0]}")
            image = image[0]
        if image.ndim != 3 or image.shape[0] != 3:
            raise InputError(f"Expected a (3, H, W) image, got shape {image.shape}")
        scaled = np.asarray(image, dtype=np.float64) * 255.0
        rounded = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
        pixels = np.clip(rounded, 0, 255).astype(np.uint8).transpose(1, 2, 0)
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(np.ascontiguousarray(pixels)).save(path, format="PNG")
