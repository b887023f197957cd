"""Image quality metrics: PSNR and SSIM."""

import math

import numpy as np
from skimage.metrics import structural_similarity

from mimo_deblur.core.errors import UsageError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise UsageError(f"Images differ in shape: {a.shape} vs {b.shape}")


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB over all channels jointly; +inf for identical images."""
    _check_pair(a, b)
    diff = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return -10.0 * math.log10(mse / (peak * peak))


def ssim(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """Mean SSIM with an 11x11 Gaussian window (sigma 1.5), averaged over channels."""
    _check_pair(a, b)
    if a.ndim not in (2, 3):
        raise UsageError(f"SSIM expects (H, W) or (C, H, W) images, got shape {a.shape}")
    if min(a.shape[-2:]) < SSIM_WINDOW:
        raise UsageError(
            f"Images of size {a.shape[-2:]} are smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )
    # Population statistics with a Gaussian window; skimage crops the map to valid positions
    # before averaging, so the border never contributes.
    value = structural_similarity(
        np.asarray(a, dtype=np.float64),
        np.asarray(b, dtype=np.float64),
        data_range=peak,
        channel_axis=0 if a.ndim == 3 else None,
        gaussian_weights=True,
        sigma=SSIM_SIGMA,
        use_sample_covariance=False,
        K1=SSIM_K1,
        K2=SSIM_K2,
    )
    return float(value)


def quantize(image: np.ndarray) -> np.ndarray:
    """Round to the 8-bit grid (half away from zero) and map back to [0, 1]."""
    scaled = np.clip(np.asarray(image, dtype=np.float64) * 255.0, 0.0, 255.0)
    return (np.floor(scaled + 0.5) / 255.0).astype(np.float32)
