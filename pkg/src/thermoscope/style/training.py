"""Generator training loop and batch stylization.

Training samples one style image per iteration from the style manifest
(seeded substream), cycles the style size through the configured list in
order, and optimizes with Adam (first-moment decay 0.9 standing in for
the quoted "momentum"). Deterministic mode pins torch to one thread and
derives every random draw from named substreams of the config seed, so a
rerun reproduces the loss history bitwise.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch

from thermoscope.container import load_container, save_container
from thermoscope.datasets.manifest import manifest_to_dict
from thermoscope.datasets.types import DatasetManifest, LabeledImage
from thermoscope.errors import NumericError, ParseError, ValidationError
from thermoscope.imaging import load_image, resize_image, save_image
from thermoscope.rng import substream_rng
from thermoscope.style.features import LossNetwork, default_loss_network, set_style_targets
from thermoscope.style.generator import GeneratorParams, generator_forward
from thermoscope.style.losses import total_objective_t
from thermoscope.style.types import LossWeights, PAPER_LOSS_WEIGHTS, StyleTargets

logger = logging.getLogger(__name__)

CHECKPOINT_KIND = "msgnet-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class StyleTrainConfig:
    content_manifest: DatasetManifest
    style_manifest: DatasetManifest
    epochs: int = 100
    batch_size: int = 4
    learning_rate: float = 1e-3
    style_sizes: Tuple[int, ...] = (256, 512, 768)
    content_size: int = 256
    loss_weights: LossWeights = PAPER_LOSS_WEIGHTS
    seed: int = 0
    width: int = 32
    n_residual: int = 5

    def __post_init__(self) -> None:
        object.__setattr__(self, "style_sizes", tuple(self.style_sizes))
        if self.epochs < 1 or self.batch_size < 1:
            raise ValidationError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not self.style_sizes:
            raise ValidationError("style_sizes must be nonempty")
        if self.content_size < 16:
            raise ValidationError("content_size must be >= 16 (loss-network minimum)")

    def snapshot(self) -> dict:
        """JSON-safe summary embedded in checkpoints (manifests by name, not value)."""
        return {
            "content_manifest": self.content_manifest.name,
            "content_images": len(self.content_manifest.records),
            "style_manifest": self.style_manifest.name,
            "style_images": len(self.style_manifest.records),
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "style_sizes": list(self.style_sizes),
            "content_size": self.content_size,
            "loss_weights": self.loss_weights.to_dict(),
            "seed": self.seed,
            "width": self.width,
            "n_residual": self.n_residual,
        }


@dataclass(frozen=True)
class TrainLogEntry:
    iter: int
    total: float
    content: float
    style: float
    tv: float
    style_size: int
    t: float

    def to_dict(self) -> dict:
        return {
            "iter": self.iter,
            "total": self.total,
            "content": self.content,
            "style": self.style,
            "tv": self.tv,
            "style_size": self.style_size,
            "t": self.t,
        }


@dataclass
class TrainLog:
    entries: List[TrainLogEntry] = field(default_factory=list)

    def append(self, entry: TrainLogEntry) -> None:
        if self.entries and entry.iter <= self.entries[-1].iter:
            raise ValidationError("iteration indices must be strictly increasing")
        self.entries.append(entry)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for entry in self.entries:
                fh.write(json.dumps(entry.to_dict()) + "\n")


@dataclass
class Checkpoint:
    params: GeneratorParams
    config_snapshot: dict
    epoch: int
    loss_history: List[Tuple[int, float, float, float, float]]
    format_version: int = CHECKPOINT_VERSION


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> None:
    module = checkpoint.params.module
    tensors = {k: v.detach().cpu().numpy() for k, v in module.state_dict().items()}
    metadata = {
        "kind": CHECKPOINT_KIND,
        "format_version": checkpoint.format_version,
        "width": checkpoint.params.width,
        "n_residual": checkpoint.params.n_residual,
        "seed": checkpoint.params.seed,
        "epoch": checkpoint.epoch,
        "config": checkpoint.config_snapshot,
        "loss_history": [list(row) for row in checkpoint.loss_history],
    }
    save_container(path, metadata, tensors)


def load_checkpoint(path: str | Path) -> Checkpoint:
    metadata, tensors = load_container(path)
    if metadata.get("kind") != CHECKPOINT_KIND:
        raise ParseError(f"{path} is not a generator checkpoint (kind={metadata.get('kind')!r})")
    params = GeneratorParams.initialize(
        width=int(metadata["width"]),
        n_residual=int(metadata["n_residual"]),
        seed=int(metadata["seed"]),
    )
    state = {k: torch.from_numpy(v) for k, v in tensors.items()}
    params.module.load_state_dict(state)
    return Checkpoint(
        params=params,
        config_snapshot=metadata.get("config", {}),
        epoch=int(metadata.get("epoch", 0)),
        loss_history=[tuple(row) for row in metadata.get("loss_history", [])],
        format_version=int(metadata.get("format_version", 1)),
    )


def _readable_records(manifest: DatasetManifest, what: str) -> List[LabeledImage]:
    records, dropped = [], 0
    for record in sorted(manifest.records, key=lambda r: r.image_id):
        if Path(record.path).is_file():
            records.append(record)
        else:
            dropped += 1
    if dropped:
        logger.warning("%s: skipped %d unreadable %s images", manifest.name, dropped, what)
    if not records:
        raise ValidationError(f"no readable {what} images in manifest {manifest.name!r}")
    return records


def train_msgnet(
    config: StyleTrainConfig,
    network: Optional[LossNetwork] = None,
    deterministic: bool = True,
    log_path: str | Path | None = None,
) -> Tuple[Checkpoint, TrainLog]:
    """Train the generator; returns the final checkpoint and per-iteration log."""
    if network is None:
        network = default_loss_network(seed=config.seed)
    if deterministic:
        torch.set_num_threads(1)

    content_records = _readable_records(config.content_manifest, "content")
    style_records = _readable_records(config.style_manifest, "style")

    params = GeneratorParams.initialize(
        width=config.width, n_residual=config.n_residual, seed=config.seed
    )
    params.module.train()
    optimizer = torch.optim.Adam(
        params.module.parameters(), lr=config.learning_rate, betas=(0.9, 0.999)
    )

    style_rng = substream_rng(config.seed, "style-sample")
    target_cache: Dict[Tuple[str, int], StyleTargets] = {}
    log = TrainLog()
    history: List[Tuple[int, float, float, float, float]] = []
    iteration = 0
    for epoch in range(config.epochs):
        order = substream_rng(config.seed, f"content-order:{epoch}").permutation(
            len(content_records)
        )
        for start in range(0, len(order), config.batch_size):
            iteration += 1
            batch_records = [content_records[i] for i in order[start : start + config.batch_size]]
            batch = np.stack(
                [resize_image(load_image(r.path), config.content_size) for r in batch_records]
            )
            size = config.style_sizes[(iteration - 1) % len(config.style_sizes)]
            style_record = style_records[int(style_rng.integers(len(style_records)))]
            key = (style_record.image_id, size)
            if key not in target_cache:
                style_img = resize_image(load_image(style_record.path), size)
                target_cache[key] = set_style_targets(style_img, network)
            targets = target_cache[key]

            x = torch.from_numpy(batch)
            optimizer.zero_grad()
            total, c_term, s_term, tv_term = total_objective_t(
                x, params, targets, config.loss_weights, network
            )
            n = x.shape[0]
            loss = total / n
            if not torch.isfinite(loss):
                raise NumericError(f"non-finite loss at iteration {iteration}")
            loss.backward()
            optimizer.step()

            entry = TrainLogEntry(
                iter=iteration,
                total=float(total.detach()) / n,
                content=float(c_term.detach()) / n,
                style=float(s_term.detach()) / n,
                tv=float(tv_term.detach()) / n,
                style_size=size,
                t=time.time(),
            )
            log.append(entry)
            history.append((iteration, entry.total, entry.content, entry.style, entry.tv))

    checkpoint = Checkpoint(
        params=params,
        config_snapshot=config.snapshot(),
        epoch=config.epochs,
        loss_history=history,
    )
    if log_path is not None:
        log.save(log_path)
    return checkpoint, log


def stylize_image(
    content_image: np.ndarray,
    style_image: np.ndarray,
    checkpoint: Checkpoint,
    network: Optional[LossNetwork] = None,
) -> np.ndarray:
    """Apply a trained generator to one (content, style) pair."""
    if network is None:
        network = default_loss_network(seed=checkpoint.params.seed)
    targets = set_style_targets(style_image, network)
    return generator_forward(content_image, checkpoint.params, targets)


def stylize_dataset(
    manifest: DatasetManifest,
    style_source: DatasetManifest,
    checkpoint: Checkpoint,
    out_dir: str | Path,
    seed: int = 0,
    network: Optional[LossNetwork] = None,
) -> DatasetManifest:
    """Stylize every image of a manifest; annotations and ids are untouched.

    The style image for each content image is a deterministic per-image
    draw from ``style_source`` under ``seed``, independent of iteration
    order, so reruns assign identically.
    """
    if network is None:
        network = default_loss_network(seed=checkpoint.params.seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    style_records = _readable_records(style_source, "style")
    target_cache: Dict[str, StyleTargets] = {}

    new_records = []
    for record in sorted(manifest.records, key=lambda r: r.image_id):
        rng = substream_rng(seed, f"stylize:{record.image_id}")
        style_record = style_records[int(rng.integers(len(style_records)))]
        if style_record.image_id not in target_cache:
            target_cache[style_record.image_id] = set_style_targets(
                load_image(style_record.path), network
            )
        styled = generator_forward(
            load_image(record.path), checkpoint.params, target_cache[style_record.image_id]
        )
        out_path = out_dir / (record.image_id + ".png")
        try:
            save_image(styled, out_path)
        except OSError as exc:
            raise ValidationError(f"cannot write styled image {out_path}: {exc}") from exc
        new_records.append(
            LabeledImage(
                image_id=record.image_id,
                path=str(out_path),
                width=record.width,
                height=record.height,
                spectrum=record.spectrum,
                annotations=list(record.annotations),
            )
        )

    split = {r.image_id: manifest.split[r.image_id] for r in new_records if r.image_id in manifest.split}
    return DatasetManifest(
        name=f"{manifest.name}-styled",
        class_set=list(manifest.class_set),
        records=new_records,
        split=split,
    )
