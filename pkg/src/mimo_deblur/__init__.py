"""Coarse-to-fine single-image deblurring on a minimal autodiff core."""

__version__ = "0.1.0"
