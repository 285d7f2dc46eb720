"""Declarative run configuration and the run record it produces.

Configs are JSON with a fixed key vocabulary; unknown keys are errors so
typos never silently change an experiment. Documented key paths:

    pipeline                 one of: baseline odsc sanity-swap cdmt weak-label bench
    out_dir                  output directory for all artifacts
    seed                     master seed; all randomness branches from it
    deterministic            pin threads + serial order (default true)
    datasets.content         manifest JSON (content/thermal side)
    datasets.style           manifest JSON (style source)
    datasets.paired          manifest JSON holding both spectra (cdmt)
    datasets.unlabeled_dir   directory of raw images (weak-label)
    datasets.probe           labeled manifest for weak-label accuracy audit
    detector.*               DetectorSpec fields (architecture, backbone, ...)
    detector_handle          trained detector container (sanity-swap, weak-label, bench)
    style_checkpoint         generator checkpoint; alternative to style_train
    style_train.*            StyleTrainConfig overrides (epochs, width, ...)
    evaluation.iou_threshold evaluation.interpolation evaluation.score_threshold
    weak_label.confidence_threshold   weak_label.stylize
    bench.warmup bench.runs
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

from thermoscope.errors import ConfigError

PIPELINES = ("baseline", "odsc", "sanity-swap", "cdmt", "weak-label", "bench")

_TOP_KEYS = {
    "pipeline", "out_dir", "seed", "deterministic", "datasets", "detector",
    "detector_handle", "style_checkpoint", "style_train", "evaluation",
    "weak_label", "bench",
}
_DATASET_KEYS = {"content", "style", "paired", "unlabeled_dir", "probe"}
_DETECTOR_KEYS = {
    "architecture", "backbone", "class_set", "learning_rate", "epochs",
    "batch_size", "input_size", "seed",
}
_STYLE_TRAIN_KEYS = {
    "epochs", "batch_size", "learning_rate", "style_sizes", "content_size",
    "loss_weights", "seed", "width", "n_residual",
}
_EVAL_KEYS = {"iou_threshold", "interpolation", "score_threshold"}
_WEAK_KEYS = {"confidence_threshold", "stylize"}
_BENCH_KEYS = {"warmup", "runs"}


def _reject_unknown(section: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown config keys in {where}: {unknown}")


@dataclass
class PipelineConfig:
    pipeline: str
    out_dir: str
    seed: int = 0
    deterministic: bool = True
    datasets: Dict[str, str] = field(default_factory=dict)
    detector: Dict = field(default_factory=dict)
    detector_handle: Optional[str] = None
    style_checkpoint: Optional[str] = None
    style_train: Dict = field(default_factory=dict)
    evaluation: Dict = field(default_factory=dict)
    weak_label: Dict = field(default_factory=dict)
    bench: Dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"unknown pipeline {self.pipeline!r}; valid: {list(PIPELINES)}")
        if not self.out_dir:
            raise ConfigError("out_dir is required")
        self._check_required()

    def _check_required(self) -> None:
        need = {
            "baseline": ["datasets.content"],
            "odsc": ["datasets.content", "datasets.style"],
            "sanity-swap": ["datasets.content", "datasets.style", "detector_handle",
                            "style_checkpoint"],
            "cdmt": ["datasets.paired"],
            "weak-label": ["datasets.unlabeled_dir", "detector_handle"],
            "bench": ["datasets.content", "detector_handle"],
        }[self.pipeline]
        for dotted in need:
            parts = dotted.split(".")
            value = getattr(self, parts[0])
            for p in parts[1:]:
                value = value.get(p) if isinstance(value, dict) else None
            if not value:
                raise ConfigError(f"pipeline {self.pipeline!r} requires config key {dotted!r}")
        if self.pipeline in ("odsc", "cdmt") and not (self.style_checkpoint or self.style_train):
            raise ConfigError(
                f"pipeline {self.pipeline!r} requires style_checkpoint or a style_train section"
            )

    def input_files(self) -> Dict[str, str]:
        """role -> path for every file-like input named by the config."""
        files = {}
        for role, path in self.datasets.items():
            if role == "unlabeled_dir":
                continue
            files[f"datasets.{role}"] = path
        if self.detector_handle:
            files["detector_handle"] = self.detector_handle
        if self.style_checkpoint:
            files["style_checkpoint"] = self.style_checkpoint
        return files

    def validate_inputs_exist(self) -> None:
        for role, path in self.input_files().items():
            if not Path(path).is_file():
                raise ConfigError(f"config references missing file for {role}: {path}")
        unlabeled = self.datasets.get("unlabeled_dir")
        if unlabeled and not Path(unlabeled).is_dir():
            raise ConfigError(f"unlabeled_dir does not exist: {unlabeled}")

    def to_dict(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "out_dir": self.out_dir,
            "seed": self.seed,
            "deterministic": self.deterministic,
            "datasets": dict(self.datasets),
            "detector": dict(self.detector),
            "detector_handle": self.detector_handle,
            "style_checkpoint": self.style_checkpoint,
            "style_train": dict(self.style_train),
            "evaluation": dict(self.evaluation),
            "weak_label": dict(self.weak_label),
            "bench": dict(self.bench),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        _reject_unknown(data, _TOP_KEYS, "the top level")
        for key, allowed in (
            ("datasets", _DATASET_KEYS),
            ("detector", _DETECTOR_KEYS),
            ("style_train", _STYLE_TRAIN_KEYS),
            ("evaluation", _EVAL_KEYS),
            ("weak_label", _WEAK_KEYS),
            ("bench", _BENCH_KEYS),
        ):
            section = data.get(key, {})
            if not isinstance(section, dict):
                raise ConfigError(f"config key {key!r} must be an object")
            _reject_unknown(section, allowed, f"section {key!r}")
        interpolation = data.get("evaluation", {}).get("interpolation")
        if interpolation not in (None, "all-point", "voc2007-11pt"):
            raise ConfigError(f"unknown evaluation.interpolation {interpolation!r}")
        try:
            return cls(
                pipeline=data.get("pipeline", ""),
                out_dir=data.get("out_dir", ""),
                seed=int(data.get("seed", 0)),
                deterministic=bool(data.get("deterministic", True)),
                datasets=dict(data.get("datasets", {})),
                detector=dict(data.get("detector", {})),
                detector_handle=data.get("detector_handle"),
                style_checkpoint=data.get("style_checkpoint"),
                style_train=dict(data.get("style_train", {})),
                evaluation=dict(data.get("evaluation", {})),
                weak_label=dict(data.get("weak_label", {})),
                bench=dict(data.get("bench", {})),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config value: {exc}") from exc


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    config = PipelineConfig.from_dict(data)
    config.validate_inputs_exist()
    return config


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def hash_inputs(config: PipelineConfig) -> Dict[str, str]:
    """Content hashes of every referenced input, directories hashed file-wise."""
    hashes = {role: sha256_file(path) for role, path in config.input_files().items()}
    unlabeled = config.datasets.get("unlabeled_dir")
    if unlabeled:
        digest = hashlib.sha256()
        for p in sorted(Path(unlabeled).iterdir()):
            if p.is_file():
                digest.update(p.name.encode())
                digest.update(bytes.fromhex(sha256_file(p)))
        hashes["datasets.unlabeled_dir"] = digest.hexdigest()
    return hashes


@dataclass
class RunRecord:
    """What a pipeline run consumed and produced, persisted next to its artifacts."""

    pipeline: str
    config_snapshot: dict
    input_hashes: Dict[str, str]
    started: str
    finished: str
    artifacts: Dict[str, str]
    report: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "config": self.config_snapshot,
            "input_hashes": dict(self.input_hashes),
            "started": self.started,
            "finished": self.finished,
            "artifacts": dict(self.artifacts),
            "report": self.report,
        }

    def save(self, path: str | Path) -> None:
        for name, artifact in self.artifacts.items():
            if not Path(artifact).exists():
                raise ConfigError(f"artifact {name!r} missing at completion: {artifact}")
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
