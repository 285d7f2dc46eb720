"""Carrier types for style statistics.

Feature maps are (C, H, W) numeric arrays taken at numbered pyramid
scales; Gram matrices are the channel-by-channel second-order statistics
computed from them, normalized by C*H*W (recorded per matrix so tests
are unambiguous about the constant).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from thermoscope.errors import DimensionError, NumericError, ValidationError


@dataclass(frozen=True)
class FeatureMap:
    """One activation volume: values (C, H, W), taken at pyramid scale ``scale_index``."""

    values: np.ndarray
    scale_index: int

    def __post_init__(self) -> None:
        if self.values.ndim != 3:
            raise DimensionError(f"feature map must be rank 3, got shape {self.values.shape}")
        if min(self.values.shape) < 1:
            raise DimensionError(f"feature map dimensions must be >= 1, got {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise NumericError(f"feature map at scale {self.scale_index} has non-finite entries")

    @property
    def channels(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class FeaturePyramid:
    """Ordered feature maps at scales 1..K; ``content_scale`` marks the content-loss tap."""

    maps: Tuple[FeatureMap, ...]
    content_scale: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "maps", tuple(self.maps))
        if not self.maps:
            raise ValidationError("pyramid needs at least one scale")
        indices = [m.scale_index for m in self.maps]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValidationError(f"scale indices must be strictly increasing, got {indices}")
        if self.content_scale not in indices:
            raise ValidationError(
                f"content_scale {self.content_scale} is not one of the scales {indices}"
            )

    @property
    def content_map(self) -> FeatureMap:
        for m in self.maps:
            if m.scale_index == self.content_scale:
                return m
        raise ValidationError("unreachable: content_scale validated at construction")


@dataclass(frozen=True)
class GramMatrix:
    """C x C Gram statistic of a feature map; ``normalization`` is the divisor used."""

    values: np.ndarray
    scale_index: int
    normalization: float

    def __post_init__(self) -> None:
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DimensionError(f"Gram matrix must be square, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise NumericError(f"Gram matrix at scale {self.scale_index} has non-finite entries")
        scale = max(float(np.abs(v).max()), 1.0)
        if float(np.abs(v - v.T).max()) > 1e-6 * scale:
            raise ValidationError("Gram matrix is not symmetric within 1e-6 relative")

    @property
    def channels(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class CoMatchWeights:
    """The learnable square mixing matrix of the feature-matching layer."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DimensionError(f"weights must be square, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise NumericError("weights have non-finite entries")


@dataclass(frozen=True)
class StyleTargets:
    """Per-scale Gram targets computed from one style image."""

    grams: Tuple[GramMatrix, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "grams", tuple(self.grams))
        if not self.grams:
            raise ValidationError("style targets need at least one scale")

    def for_channels(self, channels: int) -> GramMatrix:
        """The target whose dimension matches a given channel count."""
        for g in self.grams:
            if g.channels == channels:
                return g
        raise DimensionError(
            f"no style target with {channels} channels; "
            f"available: {[g.channels for g in self.grams]}"
        )


@dataclass(frozen=True)
class LossWeights:
    """Balancing weights for the content / style / smoothness terms."""

    lambda_c: float = 1.0
    lambda_s: float = 5.0
    lambda_tv: float = 1e-6

    def __post_init__(self) -> None:
        for name in ("lambda_c", "lambda_s", "lambda_tv"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or v < 0:
                raise ValidationError(f"{name} must be >= 0, got {v!r}")

    def combine(self, content: float, style: float, tv: float) -> float:
        return self.lambda_c * content + self.lambda_s * style + self.lambda_tv * tv

    def to_dict(self) -> dict:
        return {"lambda_c": self.lambda_c, "lambda_s": self.lambda_s, "lambda_tv": self.lambda_tv}

    @classmethod
    def from_dict(cls, data: dict) -> "LossWeights":
        return cls(**data)


PAPER_LOSS_WEIGHTS = LossWeights(lambda_c=1.0, lambda_s=5.0, lambda_tv=1e-6)
