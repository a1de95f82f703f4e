"""Mask-based scene text removal."""

from ._core import (
    Error,
    InvalidArgument,
    IoError,
    Model,
    NumericError,
    SchemaError,
    composite,
    dilate_disk,
    generate_sample,
    mask_prf,
    mse_mae_pct,
    pad_mask,
    psnr,
    rasterize_boxes,
    ssim,
)

__all__ = [
    "Error",
    "InvalidArgument",
    "IoError",
    "Model",
    "NumericError",
    "SchemaError",
    "composite",
    "dilate_disk",
    "generate_sample",
    "mask_prf",
    "mse_mae_pct",
    "pad_mask",
    "psnr",
    "rasterize_boxes",
    "ssim",
]
