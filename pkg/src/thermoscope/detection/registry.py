"""Detector configurations and the uniform adapter contract.

Six (architecture, backbone) combinations are registered: five standard
detector stacks that require externally supplied implementations and
weights, and ``reference-mini``/``mini``, the in-repo detector every test
and toy pipeline runs on. The external five carry their published
training hyperparameters as defaults so configs stay declarative; calling
train/infer on them without plugging in a backend factory raises
ExternalBackendError with instructions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from thermoscope.datasets.types import DatasetManifest, LabeledImage
from thermoscope.detection import detector as mini
from thermoscope.detection.types import Detection
from thermoscope.errors import ConfigError, ExternalBackendError, ValidationError

# (architecture, backbone) -> (learning_rate, epochs, input_size)
# Visible-domain transfer runs override the learning rate; see CDMT_LEARNING_RATES.
REGISTERED_COMBOS: Dict[Tuple[str, str], Tuple[float, int, int]] = {
    ("faster-rcnn", "resnet-101"): (1e-4, 15, 600),
    ("ssd-300", "vgg-16"): (1e-4, 15, 300),
    ("ssd-300", "mobilenet-v2"): (1e-3, 15, 300),
    ("ssd-300", "efficientnet"): (1e-3, 15, 300),
    ("ssd-512", "vgg-16"): (1e-3, 15, 512),
    ("reference-mini", "mini"): (1e-3, 60, 64),
}

CDMT_LEARNING_RATES: Dict[Tuple[str, str], float] = {
    ("faster-rcnn", "resnet-101"): 1e-3,
    ("ssd-300", "vgg-16"): 1e-3,
    ("ssd-300", "mobilenet-v2"): 1e-3,
    ("ssd-300", "efficientnet"): 1e-4,
    ("ssd-512", "vgg-16"): 1e-3,
    ("reference-mini", "mini"): 1e-3,
}


@dataclass(frozen=True)
class DetectorSpec:
    architecture: str
    backbone: str
    class_set: Tuple[str, ...]
    learning_rate: float = 0.0  # 0 -> combo default
    epochs: int = 0
    batch_size: int = 4
    input_size: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        key = (self.architecture, self.backbone)
        if key not in REGISTERED_COMBOS:
            raise ConfigError(
                f"unknown detector combination {key}; valid pairs: "
                f"{sorted(REGISTERED_COMBOS)}"
            )
        if not self.class_set:
            raise ConfigError("class_set must be nonempty")
        lr, epochs, input_size = REGISTERED_COMBOS[key]
        object.__setattr__(self, "class_set", tuple(self.class_set))
        if self.learning_rate == 0.0:
            object.__setattr__(self, "learning_rate", lr)
        if self.epochs == 0:
            object.__setattr__(self, "epochs", epochs)
        if self.input_size == 0:
            object.__setattr__(self, "input_size", input_size)
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("learning_rate, epochs, batch_size must be positive")

    def for_cdmt(self) -> "DetectorSpec":
        """Same spec with the visible-domain transfer learning rate."""
        return replace(
            self, learning_rate=CDMT_LEARNING_RATES[(self.architecture, self.backbone)]
        )

    def to_dict(self) -> dict:
        return {
            "architecture": self.architecture,
            "backbone": self.backbone,
            "class_set": list(self.class_set),
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "input_size": self.input_size,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DetectorSpec":
        return cls(
            architecture=data["architecture"],
            backbone=data["backbone"],
            class_set=tuple(data["class_set"]),
            learning_rate=float(data.get("learning_rate", 0.0)),
            epochs=int(data.get("epochs", 0)),
            batch_size=int(data.get("batch_size", 4)),
            input_size=int(data.get("input_size", 0)),
            seed=int(data.get("seed", 0)),
        )


class MiniAdapter:
    """Adapter over the in-repo reference detector."""

    def train(self, manifest: DatasetManifest, spec: DetectorSpec, deterministic: bool = True):
        handle, losses = mini.train_reference_mini(
            manifest,
            class_set=spec.class_set,
            input_size=spec.input_size,
            learning_rate=spec.learning_rate,
            epochs=spec.epochs,
            batch_size=spec.batch_size,
            seed=spec.seed,
            deterministic=deterministic,
        )
        self.last_losses = losses
        return handle

    def infer(self, handle, records: Sequence[LabeledImage], score_threshold: float = 0.01):
        return mini.infer_reference_mini(handle, records, score_threshold)

    def save(self, handle, path: str | Path) -> None:
        mini.save_handle(handle, path)

    def load(self, path: str | Path):
        return mini.load_handle(path)


# hook for plugging in real detector stacks; signature: factory(spec) -> adapter
_EXTERNAL_FACTORY: Optional[Callable] = None


def set_external_factory(factory: Optional[Callable]) -> None:
    global _EXTERNAL_FACTORY
    _EXTERNAL_FACTORY = factory


class ExternalAdapter:
    """Placeholder adapter for the externally implemented detector stacks."""

    def __init__(self, spec: DetectorSpec):
        self.spec = spec

    def _resolve(self):
        if _EXTERNAL_FACTORY is None:
            raise ExternalBackendError(
                f"detector {self.spec.architecture}/{self.spec.backbone} needs an external "
                f"implementation; call set_external_factory() with a factory providing "
                f"train/infer/save/load, or use reference-mini for in-repo runs"
            )
        return _EXTERNAL_FACTORY(self.spec)

    def train(self, manifest, spec, deterministic: bool = True):
        return self._resolve().train(manifest, spec, deterministic)

    def infer(self, handle, records, score_threshold: float = 0.01):
        return self._resolve().infer(handle, records, score_threshold)

    def save(self, handle, path):
        return self._resolve().save(handle, path)

    def load(self, path):
        return self._resolve().load(path)


def register_detector(spec: DetectorSpec):
    """Adapter for a registered combination; ConfigError on unknown pairs."""
    if (spec.architecture, spec.backbone) == ("reference-mini", "mini"):
        return MiniAdapter()
    return ExternalAdapter(spec)
