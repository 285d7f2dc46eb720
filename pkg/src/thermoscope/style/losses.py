"""Content, style, and smoothness losses, plus the weighted total objective.

Scalar definitions (all sums of squares, no size normalization; the
balancing weights are applied only inside the total):

    content(F_gen, F_c) = ||F_gen - F_c||_F^2           at the content scale
    style(P, T)         = sum_j ||G(P_j) - T_j||_F^2    over all scales
    tv(I)               = sum (I[h+1,w]-I[h,w])^2 + (I[h,w+1]-I[h,w])^2
    total               = lambda_c*content + lambda_s*style + lambda_tv*tv
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from thermoscope.errors import DimensionError
from thermoscope.imaging import check_image
from thermoscope.style import diff
from thermoscope.style.features import CONTENT_SCALE, LossNetwork, set_style_targets
from thermoscope.style.generator import GeneratorParams, apply_style_targets
from thermoscope.style.ops import gram
from thermoscope.style.types import (
    FeatureMap,
    FeaturePyramid,
    LossWeights,
    StyleTargets,
)


def content_loss(generated: FeatureMap, content: FeatureMap) -> float:
    """Unweighted squared Frobenius norm of the feature difference."""
    if generated.values.shape != content.values.shape:
        raise DimensionError(
            f"feature shapes differ: {generated.values.shape} vs {content.values.shape}"
        )
    delta = generated.values.astype(np.float64) - content.values.astype(np.float64)
    return float(np.sum(delta * delta))


def style_loss(pyramid: FeaturePyramid, targets: StyleTargets) -> float:
    """Sum over scales of squared Frobenius distance between Grams and targets."""
    if len(pyramid.maps) != len(targets.grams):
        raise DimensionError(
            f"{len(pyramid.maps)} pyramid scales vs {len(targets.grams)} targets"
        )
    total = 0.0
    for fmap, target in zip(pyramid.maps, targets.grams):
        if fmap.scale_index != target.scale_index:
            raise DimensionError(
                f"scale mismatch: map {fmap.scale_index} vs target {target.scale_index}"
            )
        g = gram(fmap)
        if g.values.shape != target.values.shape:
            raise DimensionError(
                f"Gram shapes differ at scale {fmap.scale_index}: "
                f"{g.values.shape} vs {target.values.shape}"
            )
        delta = g.values - target.values
        total += float(np.sum(delta * delta))
    return total


def tv_loss(image: np.ndarray) -> float:
    """Anisotropic squared total variation of a (C, H, W) array."""
    if image.ndim != 3:
        raise DimensionError(f"expected (C, H, W), got shape {image.shape}")
    if image.shape[1] < 2 or image.shape[2] < 2:
        raise DimensionError(
            f"total variation needs spatial dimensions >= 2, got {image.shape[1:]}"
        )
    arr = image.astype(np.float64)
    dh = arr[:, 1:, :] - arr[:, :-1, :]
    dw = arr[:, :, 1:] - arr[:, :, :-1]
    return float(np.sum(dh * dh) + np.sum(dw * dw))


@dataclass(frozen=True)
class ObjectiveBreakdown:
    """Weighted total plus the three unweighted terms that produced it."""

    total: float
    content: float
    style: float
    tv: float


def total_objective_t(
    content_batch: torch.Tensor,
    params: GeneratorParams,
    targets: StyleTargets,
    weights: LossWeights,
    network: LossNetwork,
) -> tuple:
    """Differentiable total objective over a (B, 3, H, W) batch.

    Returns (total, content, style, tv) as torch scalars, each summed over
    the batch; the training loop divides by batch size itself.
    """
    apply_style_targets(params, targets)
    generated = params.module(content_batch)
    gen_taps = network.forward_taps(generated)
    with torch.no_grad():
        content_taps = network.forward_taps(content_batch)
    c_idx = CONTENT_SCALE - 1
    content_term = diff.content_loss_t(gen_taps[c_idx], content_taps[c_idx])
    dtype = gen_taps[0].dtype
    target_grams = [
        torch.from_numpy(np.ascontiguousarray(g.values)).to(dtype) for g in targets.grams
    ]
    style_term = diff.style_loss_t(gen_taps, target_grams)
    tv_term = diff.tv_loss_t(generated)
    total = (
        weights.lambda_c * content_term
        + weights.lambda_s * style_term
        + weights.lambda_tv * tv_term
    )
    return total, content_term, style_term, tv_term


def total_objective(
    content_image: np.ndarray,
    style_image: np.ndarray,
    params: GeneratorParams,
    weights: LossWeights,
    network: LossNetwork,
) -> ObjectiveBreakdown:
    """Full objective for one (content, style) pair under the current params."""
    check_image(content_image)
    check_image(style_image)
    targets = set_style_targets(style_image, network)
    dtype = next(params.module.parameters()).dtype
    x = torch.from_numpy(np.ascontiguousarray(content_image)).to(dtype).unsqueeze(0)
    params.module.eval()
    with torch.no_grad():
        total, c, s, tv = total_objective_t(x, params, targets, weights, network)
    return ObjectiveBreakdown(float(total), float(c), float(s), float(tv))
