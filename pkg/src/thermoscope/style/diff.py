"""Differentiable forms of the style losses, used by training and gradient checks.

These mirror the numpy contract ops in ``ops``/``losses`` exactly (same
normalizations, same reductions); each returns the SUM over the batch so
a batch of one reproduces the scalar definitions bit-for-bit up to dtype.
"""

from __future__ import annotations

from typing import List, Sequence

import torch

from thermoscope.errors import DimensionError


def gram_t(features: torch.Tensor) -> torch.Tensor:
    """Normalized Gram of a (B, C, H, W) batch -> (B, C, C)."""
    if features.dim() != 4:
        raise DimensionError(f"expected (B, C, H, W), got shape {tuple(features.shape)}")
    b, c, h, w = features.shape
    flat = features.reshape(b, c, h * w)
    return torch.bmm(flat, flat.transpose(1, 2)) / float(c * h * w)


def content_loss_t(generated: torch.Tensor, content: torch.Tensor) -> torch.Tensor:
    """Squared Frobenius distance between feature batches, summed over the batch."""
    if generated.shape != content.shape:
        raise DimensionError(
            f"feature shapes differ: {tuple(generated.shape)} vs {tuple(content.shape)}"
        )
    return ((generated - content) ** 2).sum()


def style_loss_t(
    generated_taps: Sequence[torch.Tensor], target_grams: Sequence[torch.Tensor]
) -> torch.Tensor:
    """Sum over scales of squared Frobenius Gram distance, summed over the batch."""
    if len(generated_taps) != len(target_grams):
        raise DimensionError(
            f"{len(generated_taps)} taps vs {len(target_grams)} targets"
        )
    total = None
    for tap, target in zip(generated_taps, target_grams):
        g = gram_t(tap)
        if target.shape != g.shape[1:]:
            raise DimensionError(
                f"target shape {tuple(target.shape)} does not match Gram {tuple(g.shape[1:])}"
            )
        term = ((g - target.unsqueeze(0)) ** 2).sum()
        total = term if total is None else total + term
    return total if total is not None else torch.zeros(())


def tv_loss_t(images: torch.Tensor) -> torch.Tensor:
    """Anisotropic squared total variation of a (B, C, H, W) batch, summed."""
    if images.dim() != 4:
        raise DimensionError(f"expected (B, C, H, W), got shape {tuple(images.shape)}")
    if images.shape[-2] < 2 or images.shape[-1] < 2:
        raise DimensionError(
            f"total variation needs spatial dimensions >= 2, got {tuple(images.shape[-2:])}"
        )
    dh = images[:, :, 1:, :] - images[:, :, :-1, :]
    dw = images[:, :, :, 1:] - images[:, :, :, :-1]
    return (dh ** 2).sum() + (dw ** 2).sum()
