"""Multi-style transformation network with a feature-matching layer.

Architecture (desk-scale trainable, recorded in checkpoint metadata):
3 stride-2 encoder convolutions (widths w, 2w, 4w), the matching layer at
the deepest scale, 5 residual blocks, 3 nearest-upsample+conv stages,
instance normalization throughout, sigmoid output. Inputs are reflection
padded to a multiple of 8 and cropped back, so any size >= 8 works and
output dimensions always equal input dimensions.

The encoder width is constrained so that 4w equals one of the loss
network's tap channel counts; the Gram target at that scale then slots
straight into the matching layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch
from torch import nn

from thermoscope.errors import DimensionError, StateError, ValidationError
from thermoscope.imaging import check_image
from thermoscope.rng import substream_seed
from thermoscope.style.features import TAP_CHANNELS
from thermoscope.style.types import StyleTargets

VALID_WIDTHS = tuple(c // 4 for c in TAP_CHANNELS)  # (16, 32, 64, 128)


class _ConvBlock(nn.Module):
    def __init__(self, c_in, c_out, kernel, stride=1, norm=True, act=True):
        super().__init__()
        self.pad = nn.ReflectionPad2d(kernel // 2)
        self.conv = nn.Conv2d(c_in, c_out, kernel, stride=stride)
        self.norm = nn.InstanceNorm2d(c_out, affine=True) if norm else None
        self.act = act

    def forward(self, x):
        x = self.conv(self.pad(x))
        if self.norm is not None:
            x = self.norm(x)
        if self.act:
            x = torch.relu(x)
        return x


class _ResidualBlock(nn.Module):
    def __init__(self, channels):
        super().__init__()
        self.block1 = _ConvBlock(channels, channels, 3)
        self.block2 = _ConvBlock(channels, channels, 3, act=False)

    def forward(self, x):
        return x + self.block2(self.block1(x))


class CoMatchLayer(nn.Module):
    """Learnable mixing of content features toward a target Gram.

    forward computes phi_inv[(phi(F)^T . W . G)^T] per batch element,
    identical to the pure-numpy op. The target is per-style state, set
    from StyleTargets before each forward pass; the weight W is the only
    learnable part and starts at identity (pass-through).
    """

    def __init__(self, channels: int):
        super().__init__()
        self.channels = channels
        self.weight = nn.Parameter(torch.eye(channels))
        self._target: Optional[torch.Tensor] = None

    def set_target(self, target: torch.Tensor) -> None:
        if target.shape != (self.channels, self.channels):
            raise DimensionError(
                f"target shape {tuple(target.shape)} does not match {self.channels} channels"
            )
        self._target = target.to(self.weight.dtype)

    def forward(self, x):
        if self._target is None:
            raise StateError("style targets not set; call set_style_targets first")
        b, c, h, w = x.shape
        flat = x.reshape(b, c, h * w)
        mixed = self._target.t() @ self.weight.t()  # (C, C)
        return (mixed @ flat).reshape(b, c, h, w)


class MSGNet(nn.Module):
    def __init__(self, width: int = 32, n_residual: int = 5):
        super().__init__()
        if width not in VALID_WIDTHS:
            raise ValidationError(
                f"width must be one of {VALID_WIDTHS} so 4*width matches a loss-network tap"
            )
        self.width = width
        self.encoder = nn.Sequential(
            _ConvBlock(3, width, 5, stride=2),
            _ConvBlock(width, 2 * width, 3, stride=2),
            _ConvBlock(2 * width, 4 * width, 3, stride=2),
        )
        self.comatch = CoMatchLayer(4 * width)
        self.residuals = nn.Sequential(*[_ResidualBlock(4 * width) for _ in range(n_residual)])
        self.decoder = nn.Sequential(
            nn.Upsample(scale_factor=2, mode="nearest"),
            _ConvBlock(4 * width, 2 * width, 3),
            nn.Upsample(scale_factor=2, mode="nearest"),
            _ConvBlock(2 * width, width, 3),
            nn.Upsample(scale_factor=2, mode="nearest"),
            _ConvBlock(width, width, 3),
            _ConvBlock(width, 3, 9, norm=False, act=False),
        )

    def forward(self, x):
        h, w = x.shape[-2:]
        pad_h = (-h) % 8
        pad_w = (-w) % 8
        if pad_h or pad_w:
            x = torch.nn.functional.pad(x, (0, pad_w, 0, pad_h), mode="reflect")
        y = self.encoder(x)
        y = self.comatch(y)
        y = self.residuals(y)
        y = self.decoder(y)
        y = torch.sigmoid(y)
        return y[..., :h, :w]


@dataclass
class GeneratorParams:
    """All learnable state of the generator plus the knobs that shaped it."""

    module: MSGNet
    width: int
    n_residual: int
    seed: int

    @classmethod
    def initialize(cls, width: int = 32, n_residual: int = 5, seed: int = 0) -> "GeneratorParams":
        with torch.random.fork_rng():
            torch.manual_seed(substream_seed(seed, "generator-init"))
            module = MSGNet(width=width, n_residual=n_residual)
        return cls(module=module, width=width, n_residual=n_residual, seed=seed)

    @property
    def comatch_channels(self) -> int:
        return 4 * self.width

    @property
    def comatch_scale(self) -> int:
        """1-based loss-network scale whose channel count feeds the matching layer."""
        return TAP_CHANNELS.index(self.comatch_channels) + 1


def apply_style_targets(params: GeneratorParams, targets: StyleTargets) -> None:
    """Route the right-sized Gram target into the matching layer."""
    gram_target = targets.for_channels(params.comatch_channels)
    params.module.comatch.set_target(torch.from_numpy(np.ascontiguousarray(gram_target.values)))


def generator_forward(
    content_image: np.ndarray, params: GeneratorParams, targets: StyleTargets | None
) -> np.ndarray:
    """Generate a styled image; same spatial dimensions as the content input."""
    check_image(content_image)
    if targets is None:
        raise StateError("style targets not set; pass the result of set_style_targets")
    apply_style_targets(params, targets)
    params.module.eval()
    dtype = next(params.module.parameters()).dtype
    with torch.no_grad():
        x = torch.from_numpy(np.ascontiguousarray(content_image)).to(dtype).unsqueeze(0)
        y = params.module(x)
    return y.squeeze(0).cpu().numpy()
