"""Image I/O shared by the style and detection modules.

Everything downstream works on float32 CHW arrays in [0, 1] with exactly
3 channels; grayscale sources are replicated across channels on load.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from thermoscope.errors import ValidationError


def load_image(path: str | Path) -> np.ndarray:
    """Load an image file as float32 CHW in [0, 1], always 3-channel."""
    with Image.open(path) as img:
        rgb = img.convert("RGB")
        arr = np.asarray(rgb, dtype=np.float32) / 255.0
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def save_image(image: np.ndarray, path: str | Path) -> None:
    """Write a float CHW [0, 1] array as an 8-bit PNG (or whatever the suffix says)."""
    check_image(image)
    hwc = np.clip(image, 0.0, 1.0).transpose(1, 2, 0)
    data = (hwc * 255.0 + 0.5).astype(np.uint8)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(data).save(path)


def resize_image(image: np.ndarray, size: int | tuple) -> np.ndarray:
    """Bilinear resize of a CHW [0, 1] array; ``size`` is a side or (width, height).

    Goes through 8-bit PIL, matching how images enter the toolkit from disk.
    """
    check_image(image)
    if isinstance(size, int):
        size = (size, size)
    hwc = (np.clip(image, 0.0, 1.0).transpose(1, 2, 0) * 255.0 + 0.5).astype(np.uint8)
    resized = Image.fromarray(hwc).resize(size, Image.BILINEAR)
    arr = np.asarray(resized, dtype=np.float32) / 255.0
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def check_image(image: np.ndarray) -> None:
    """Validate the CHW [0, 1] contract; raises ValidationError."""
    if not isinstance(image, np.ndarray):
        raise ValidationError(f"image must be an ndarray, got {type(image).__name__}")
    if image.ndim != 3 or image.shape[0] != 3:
        raise ValidationError(f"image must be CHW with 3 channels, got shape {image.shape}")
    if not np.issubdtype(image.dtype, np.floating):
        raise ValidationError(f"image must be float, got dtype {image.dtype}")
    if not np.isfinite(image).all():
        raise ValidationError("image contains non-finite values")
    lo, hi = float(image.min()), float(image.max())
    if lo < -1e-6 or hi > 1.0 + 1e-6:
        raise ValidationError(f"image values outside [0, 1]: min {lo}, max {hi}")
