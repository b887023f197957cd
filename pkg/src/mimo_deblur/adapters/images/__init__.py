"""Image file adapters."""

from mimo_deblur.adapters.images.png_codec import PngCodec, list_images

__all__ = ["PngCodec", "list_images"]
