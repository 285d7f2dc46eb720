"""Fixed loss network: a VGG16-architecture slice with 4 activation taps.

Taps sit after the second convolution of blocks 1 and 2 and the third
convolution of blocks 3 and 4, giving channel counts (64, 128, 256, 512)
at strides (1, 2, 4, 8). The content scale is the third tap.

Weights come from a documented container checkpoint when available
(``$THERMOSCOPE_CACHE/loss-network.tsc``); otherwise the network is
deterministically random-initialized from a named seed substream, which
keeps every algebraic and gradient property intact for offline test runs.
Inputs are [0, 1] images; channel standardization happens inside.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import List

import numpy as np
import torch
from torch import nn

from thermoscope.container import load_container, save_container
from thermoscope.errors import DimensionError, ParseError
from thermoscope.imaging import check_image
from thermoscope.rng import substream_rng
from thermoscope.style.ops import gram
from thermoscope.style.types import FeatureMap, FeaturePyramid, StyleTargets

TAP_CHANNELS = (64, 128, 256, 512)
CONTENT_SCALE = 3
MIN_SIDE = 16  # twice the deepest tap stride

# (in_channels, out_channels, tap_after?) per conv; pools sit between blocks
_VGG_PLAN = (
    ((3, 64), (64, 64, "tap")),
    ((64, 128), (128, 128, "tap")),
    ((128, 256), (256, 256), (256, 256, "tap")),
    ((256, 512), (512, 512), (512, 512, "tap")),
)

_CHANNEL_MEAN = (0.485, 0.456, 0.406)
_CHANNEL_STD = (0.229, 0.224, 0.225)


class LossNetwork(nn.Module):
    """Frozen feature extractor; never trained, only read."""

    def __init__(self, seed: int = 0, dtype: torch.dtype = torch.float32):
        super().__init__()
        self.seed = seed
        self.dtype = dtype
        rng = substream_rng(seed, "loss-network-init")
        convs = []
        self._tap_after: List[int] = []
        for block in _VGG_PLAN:
            for spec in block:
                c_in, c_out = spec[0], spec[1]
                conv = nn.Conv2d(c_in, c_out, kernel_size=3, padding=1)
                fan_in = c_in * 9
                weight = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=conv.weight.shape)
                with torch.no_grad():
                    conv.weight.copy_(torch.from_numpy(weight))
                    conv.bias.zero_()
                convs.append(conv)
                if len(spec) == 3:
                    self._tap_after.append(len(convs) - 1)
        self.convs = nn.ModuleList(convs)
        self.register_buffer("mean", torch.tensor(_CHANNEL_MEAN).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(_CHANNEL_STD).view(1, 3, 1, 1))
        self.to(dtype)
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    def forward_taps(self, x: torch.Tensor) -> List[torch.Tensor]:
        """Run a (B, 3, H, W) batch in [0, 1]; returns the 4 tap activations."""
        if x.shape[-2] < MIN_SIDE or x.shape[-1] < MIN_SIDE:
            raise DimensionError(
                f"input spatial dimensions must be >= {MIN_SIDE}, got {tuple(x.shape[-2:])}"
            )
        x = (x.to(self.dtype) - self.mean) / self.std
        taps = []
        conv_index = 0
        for block in _VGG_PLAN:
            for _ in block:
                x = torch.relu(self.convs[conv_index](x))
                if conv_index in self._tap_after:
                    taps.append(x)
                conv_index += 1
            if len(taps) < len(TAP_CHANNELS):
                x = torch.max_pool2d(x, kernel_size=2, stride=2)
        return taps


def extract_features(image: np.ndarray, network: LossNetwork) -> FeaturePyramid:
    """Feature pyramid of one [0, 1] CHW image; K=4 scales, content at scale 3."""
    check_image(image)
    if image.shape[1] < MIN_SIDE or image.shape[2] < MIN_SIDE:
        raise DimensionError(
            f"image spatial dimensions must be >= {MIN_SIDE}, got {image.shape[1:]}"
        )
    with torch.no_grad():
        x = torch.from_numpy(np.ascontiguousarray(image)).unsqueeze(0)
        taps = network.forward_taps(x)
    maps = tuple(
        FeatureMap(values=t.squeeze(0).cpu().numpy(), scale_index=j + 1)
        for j, t in enumerate(taps)
    )
    return FeaturePyramid(maps=maps, content_scale=CONTENT_SCALE)


def set_style_targets(style_image: np.ndarray, network: LossNetwork) -> StyleTargets:
    """Gram targets of a style image, one per tap scale."""
    pyramid = extract_features(style_image, network)
    return StyleTargets(grams=tuple(gram(m) for m in pyramid.maps))


def cache_dir() -> Path:
    return Path(os.environ.get("THERMOSCOPE_CACHE", Path.home() / ".cache" / "thermoscope"))


def save_loss_network(network: LossNetwork, path: str | Path) -> None:
    tensors = {k: v.cpu().numpy() for k, v in network.state_dict().items()}
    metadata = {
        "kind": "loss-network",
        "architecture": "vgg16-taps",
        "tap_channels": list(TAP_CHANNELS),
        "content_scale": CONTENT_SCALE,
        "input_range": "[0,1], channel-standardized internally",
        "seed": network.seed,
    }
    save_container(path, metadata, tensors)


def load_loss_network(path: str | Path) -> LossNetwork:
    metadata, tensors = load_container(path)
    if metadata.get("kind") != "loss-network":
        raise ParseError(f"{path} is not a loss-network checkpoint (kind={metadata.get('kind')!r})")
    network = LossNetwork(seed=int(metadata.get("seed", 0)))
    state = {k: torch.from_numpy(v) for k, v in tensors.items()}
    network.load_state_dict(state)
    return network


def default_loss_network(seed: int = 0) -> LossNetwork:
    """Cached pretrained weights when present, else seeded random init."""
    candidate = cache_dir() / "loss-network.tsc"
    if candidate.is_file():
        return load_loss_network(candidate)
    return LossNetwork(seed=seed)
