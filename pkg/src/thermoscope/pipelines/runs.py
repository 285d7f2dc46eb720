"""The experiment pipelines, end to end.

Each run consumes a PipelineConfig, trains/evaluates per its shape, and
leaves a complete artifact trail under ``out_dir``: trained handles,
detections, evaluation reports, and a run record with input hashes.

Split hygiene is enforced, not assumed: every pipeline asserts that no
evaluation image id ever entered any training input (raw or styled).
"""

from __future__ import annotations

import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import torch
from PIL import Image as PILImage

from thermoscope.datasets.manifest import (
    load_manifest,
    save_manifest,
    single_spectrum_view,
)
from thermoscope.datasets.types import DatasetManifest, LabeledImage, ObjectAnnotation
from thermoscope.datasets.voc import write_voc_file
from thermoscope.detection.bench import benchmark_fps
from thermoscope.detection.detector import load_handle
from thermoscope.detection.registry import DetectorSpec, MiniAdapter, register_detector
from thermoscope.detection.types import Detection, save_detections
from thermoscope.errors import ConfigError, ValidationError
from thermoscope.evaluation.report import (
    EvalReport,
    evaluate_detections,
    save_report,
    weak_label_report,
)
from thermoscope.pipelines.config import PipelineConfig, RunRecord, hash_inputs
from thermoscope.style.training import (
    Checkpoint,
    StyleTrainConfig,
    load_checkpoint,
    save_checkpoint,
    stylize_dataset,
    train_msgnet,
)
from thermoscope.style.types import LossWeights

logger = logging.getLogger(__name__)


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def _eval_settings(config: PipelineConfig) -> Tuple[float, str, float]:
    ev = config.evaluation
    return (
        float(ev.get("iou_threshold", 0.5)),
        ev.get("interpolation", "all-point"),
        float(ev.get("score_threshold", 0.01)),
    )


def _detector_spec(config: PipelineConfig, class_set: Sequence[str]) -> DetectorSpec:
    section = dict(config.detector)
    section.setdefault("architecture", "reference-mini")
    section.setdefault("backbone", "mini")
    section.setdefault("class_set", list(class_set))
    section.setdefault("seed", config.seed)
    return DetectorSpec.from_dict(section)


def _require_split(manifest: DatasetManifest, what: str) -> None:
    if not manifest.split or not manifest.ids("train") or not manifest.ids("val"):
        raise ConfigError(f"{what} manifest needs a train/val split with both parts nonempty")


def _assert_hygiene(train_ids: Sequence[str], eval_ids: Sequence[str]) -> None:
    overlap = sorted(set(train_ids) & set(eval_ids))
    if overlap:
        raise ValidationError(f"split hygiene violated: {overlap[:5]} in both train and eval")


def _style_train_config(
    config: PipelineConfig, content: DatasetManifest, style: DatasetManifest
) -> StyleTrainConfig:
    section = dict(config.style_train)
    weights = section.pop("loss_weights", None)
    kwargs = dict(
        content_manifest=content,
        style_manifest=style,
        seed=int(section.pop("seed", config.seed)),
    )
    if weights is not None:
        kwargs["loss_weights"] = LossWeights.from_dict(weights)
    for key in ("epochs", "batch_size", "content_size", "width", "n_residual"):
        if key in section:
            kwargs[key] = int(section.pop(key))
    if "learning_rate" in section:
        kwargs["learning_rate"] = float(section.pop("learning_rate"))
    if "style_sizes" in section:
        kwargs["style_sizes"] = tuple(int(s) for s in section.pop("style_sizes"))
    return StyleTrainConfig(**kwargs)


def _obtain_checkpoint(
    config: PipelineConfig,
    content: DatasetManifest,
    style: DatasetManifest,
    out_dir: Path,
    artifacts: Dict[str, str],
) -> Checkpoint:
    if config.style_checkpoint:
        return load_checkpoint(config.style_checkpoint)
    train_config = _style_train_config(config, content, style)
    checkpoint, _log = train_msgnet(
        train_config,
        deterministic=config.deterministic,
        log_path=out_dir / "style_train_log.ndjson",
    )
    path = out_dir / "style_checkpoint.tsc"
    save_checkpoint(checkpoint, path)
    artifacts["style_checkpoint"] = str(path)
    artifacts["style_train_log"] = str(out_dir / "style_train_log.ndjson")
    return checkpoint


def _train_subset(manifest: DatasetManifest) -> DatasetManifest:
    return manifest.subset(manifest.ids("train")) if manifest.split else manifest


def _finish(
    config: PipelineConfig,
    pipeline_tag: str,
    started: str,
    artifacts: Dict[str, str],
    report: Optional[dict],
    record_name: str = "run_record.json",
) -> RunRecord:
    record = RunRecord(
        pipeline=pipeline_tag,
        config_snapshot=config.to_dict(),
        input_hashes=hash_inputs(config),
        started=started,
        finished=_utcnow(),
        artifacts=artifacts,
        report=report,
    )
    record.save(Path(config.out_dir) / record_name)
    return record


def _train_eval_report(
    config: PipelineConfig,
    train_manifest: DatasetManifest,
    eval_records: List[LabeledImage],
    spec: DetectorSpec,
    out_dir: Path,
    artifacts: Dict[str, str],
    prefix: str = "",
) -> Tuple[EvalReport, object]:
    adapter = register_detector(spec)
    handle = adapter.train(train_manifest, spec, deterministic=config.deterministic)
    handle_path = out_dir / f"{prefix}detector_handle.tsc"
    adapter.save(handle, handle_path)
    artifacts[f"{prefix}detector_handle"] = str(handle_path)

    iou_thr, mode, score_thr = _eval_settings(config)
    detections = adapter.infer(handle, eval_records, score_thr)
    det_path = out_dir / f"{prefix}detections.ndjson"
    save_detections(detections, det_path)
    artifacts[f"{prefix}detections"] = str(det_path)

    report = evaluate_detections(detections, eval_records, spec.class_set, iou_thr, mode)
    report_path = out_dir / f"{prefix}eval_report.json"
    save_report(report, report_path)
    artifacts[f"{prefix}eval_report"] = str(report_path)
    return report, handle


def run_baseline(config: PipelineConfig) -> RunRecord:
    """Train on the thermal train split, evaluate on the thermal val split."""
    started = _utcnow()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(config.datasets["content"])
    _require_split(manifest, "content")
    _assert_hygiene(manifest.ids("train"), manifest.ids("val"))

    spec = _detector_spec(config, manifest.class_set)
    eval_records = manifest.subset(manifest.ids("val")).records
    artifacts: Dict[str, str] = {}
    report, _handle = _train_eval_report(config, manifest, eval_records, spec, out_dir, artifacts)
    return _finish(config, "baseline", started, artifacts, report.to_dict())


def run_odsc(config: PipelineConfig) -> RunRecord:
    """Stylize the thermal train split with visible styles, train on it, eval on thermal val."""
    started = _utcnow()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    content = load_manifest(config.datasets["content"])
    style = load_manifest(config.datasets["style"])
    _require_split(content, "content")

    artifacts: Dict[str, str] = {}
    content_train = _train_subset(content)
    style_source = _train_subset(style)
    checkpoint = _obtain_checkpoint(config, content_train, style_source, out_dir, artifacts)

    styled = stylize_dataset(
        content_train, style_source, checkpoint, out_dir / "styled-train", seed=config.seed
    )
    styled_path = out_dir / "styled_train_manifest.json"
    save_manifest(styled, styled_path)
    artifacts["styled_train_manifest"] = str(styled_path)

    by_id = content_train.by_id()
    for record in styled.records:
        if record.annotations != by_id[record.image_id].annotations:
            raise ValidationError(f"annotation invariance violated for {record.image_id!r}")
    val_ids = content.ids("val")
    _assert_hygiene([r.image_id for r in styled.records], val_ids)

    spec = _detector_spec(config, content.class_set)
    eval_records = content.subset(val_ids).records
    report, _handle = _train_eval_report(config, styled, eval_records, spec, out_dir, artifacts)
    return _finish(config, "odsc", started, artifacts, report.to_dict())


def run_sanity_swap(config: PipelineConfig) -> RunRecord:
    """Evaluate a thermal-trained detector on stylized val images."""
    started = _utcnow()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    content = load_manifest(config.datasets["content"])
    style = load_manifest(config.datasets["style"])
    _require_split(content, "content")
    handle = load_handle(config.detector_handle)
    checkpoint = load_checkpoint(config.style_checkpoint)

    artifacts: Dict[str, str] = {}
    val_subset = content.subset(content.ids("val"))
    styled_val = stylize_dataset(
        val_subset, _train_subset(style), checkpoint, out_dir / "styled-val", seed=config.seed
    )
    if sorted(r.image_id for r in styled_val.records) != sorted(val_subset.ids()):
        raise ValidationError("stylized val set must keep the val image ids")
    styled_path = out_dir / "styled_val_manifest.json"
    save_manifest(styled_val, styled_path)
    artifacts["styled_val_manifest"] = str(styled_path)

    iou_thr, mode, score_thr = _eval_settings(config)
    adapter = MiniAdapter()
    detections = adapter.infer(handle, styled_val.records, score_thr)
    det_path = out_dir / "detections.ndjson"
    save_detections(detections, det_path)
    artifacts["detections"] = str(det_path)
    report = evaluate_detections(
        detections, styled_val.records, handle.class_set, iou_thr, mode
    )
    report_path = out_dir / "eval_report.json"
    save_report(report, report_path)
    artifacts["eval_report"] = str(report_path)
    return _finish(config, "sanity-swap", started, artifacts, report.to_dict())


def run_cdmt(config: PipelineConfig) -> Tuple[RunRecord, RunRecord]:
    """Visible-trained detector scored on real thermal val and on thermally-styled visible val."""
    started = _utcnow()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paired = load_manifest(config.datasets["paired"])
    thermal = single_spectrum_view(paired, "thermal")
    visible = single_spectrum_view(paired, "visible")
    if sorted(thermal.ids()) != sorted(visible.ids()):
        raise ConfigError(
            "cdmt needs a paired manifest: thermal and visible views must cover the same frames"
        )
    _require_split(thermal, "paired")
    by_id = visible.by_id()
    for record in thermal.records:
        if record.annotations != by_id[record.image_id].annotations:
            raise ConfigError(
                f"cdmt needs shared annotations; frame {record.image_id!r} differs across spectra"
            )

    artifacts: Dict[str, str] = {}
    visible_train = _train_subset(visible)
    thermal_train = _train_subset(thermal)
    # style direction for cross-domain transfer: visible content, thermal style
    checkpoint = _obtain_checkpoint(config, visible_train, thermal_train, out_dir, artifacts)

    section = dict(config.detector)
    spec = _detector_spec(config, paired.class_set)
    if "learning_rate" not in section:
        spec = spec.for_cdmt()

    thermal_val_records = thermal.subset(thermal.ids("val")).records
    _assert_hygiene(visible_train.ids(), [r.image_id for r in thermal_val_records])
    report_without, handle = _train_eval_report(
        config, visible, thermal_val_records, spec, out_dir, artifacts, prefix="without_style_"
    )
    without_artifacts = dict(artifacts)

    visible_val = visible.subset(visible.ids("val"))
    styled_val = stylize_dataset(
        visible_val, thermal_train, checkpoint, out_dir / "styled-visible-val", seed=config.seed
    )
    styled_path = out_dir / "styled_visible_val_manifest.json"
    save_manifest(styled_val, styled_path)
    artifacts["styled_visible_val_manifest"] = str(styled_path)

    iou_thr, mode, score_thr = _eval_settings(config)
    adapter = MiniAdapter()
    detections = adapter.infer(handle, styled_val.records, score_thr)
    det_path = out_dir / "with_style_detections.ndjson"
    save_detections(detections, det_path)
    artifacts["with_style_detections"] = str(det_path)
    report_with = evaluate_detections(
        detections, styled_val.records, spec.class_set, iou_thr, mode
    )
    report_path = out_dir / "with_style_eval_report.json"
    save_report(report_with, report_path)
    artifacts["with_style_eval_report"] = str(report_path)

    record_without = _finish(
        config, "cdmt-without-style", started, without_artifacts,
        report_without.to_dict(), record_name="run_record_without_style.json",
    )
    record_with = _finish(
        config, "cdmt-with-style", started, artifacts,
        report_with.to_dict(), record_name="run_record_with_style.json",
    )
    return record_without, record_with


IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def run_weak_label(config: PipelineConfig) -> RunRecord:
    """Emit per-image VOC XML pseudo-labels from a trained detector."""
    started = _utcnow()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    handle = load_handle(config.detector_handle)
    unlabeled_dir = Path(config.datasets["unlabeled_dir"])
    paths = sorted(p for p in unlabeled_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise ConfigError(f"no images found under {unlabeled_dir}")

    records = []
    for p in paths:
        with PILImage.open(p) as img:
            width, height = img.size
        records.append(
            LabeledImage(
                image_id=p.stem, path=str(p), width=width, height=height,
                spectrum="thermal", annotations=[],
            )
        )
    corpus = DatasetManifest("unlabeled", [], records, {})

    artifacts: Dict[str, str] = {}
    stylize = bool(config.weak_label.get("stylize", bool(config.style_checkpoint)))
    if stylize:
        if not config.style_checkpoint or "style" not in config.datasets:
            raise ConfigError(
                "weak_label.stylize needs style_checkpoint and datasets.style"
            )
        checkpoint = load_checkpoint(config.style_checkpoint)
        style_source = _train_subset(load_manifest(config.datasets["style"]))
        corpus = stylize_dataset(
            corpus, style_source, checkpoint, out_dir / "styled-unlabeled", seed=config.seed
        )

    _iou_thr, _mode, _ = _eval_settings(config)
    threshold = float(config.weak_label.get("confidence_threshold", 0.5))
    adapter = MiniAdapter()
    detections = [
        d for d in adapter.infer(handle, corpus.records, score_threshold=threshold)
    ]
    det_path = out_dir / "detections.ndjson"
    save_detections(detections, det_path)
    artifacts["detections"] = str(det_path)

    labels_dir = out_dir / "weak_labels"
    labels_dir.mkdir(parents=True, exist_ok=True)
    by_image: Dict[str, List[Detection]] = {r.image_id: [] for r in records}
    dropped = 0
    for det in detections:
        # VOC files carry integer coordinates; sliver boxes that collapse
        # under half-up rounding have no representation there
        box = det.box
        if math.floor(box.x_min + 0.5) >= math.floor(box.x_max + 0.5) or math.floor(
            box.y_min + 0.5
        ) >= math.floor(box.y_max + 0.5):
            dropped += 1
            continue
        by_image[det.image_id].append(det)
    if dropped:
        logger.warning("dropped %d sub-pixel detections from weak labels", dropped)
    for record in records:
        pseudo = LabeledImage(
            image_id=record.image_id,
            path=record.path,
            width=record.width,
            height=record.height,
            spectrum=record.spectrum,
            annotations=[
                ObjectAnnotation(d.box, d.label) for d in by_image[record.image_id]
            ],
        )
        write_voc_file(pseudo, labels_dir / f"{record.image_id}.xml")
    artifacts["weak_labels_dir"] = str(labels_dir)

    report_dict = None
    if "probe" in config.datasets:
        probe = load_manifest(config.datasets["probe"])
        probe_corpus = probe
        if stylize:
            probe_corpus = stylize_dataset(
                probe, style_source, checkpoint, out_dir / "styled-probe", seed=config.seed
            )
        probe_dets = adapter.infer(handle, probe_corpus.records, score_threshold=threshold)
        wl = weak_label_report(probe_dets, probe.records, _iou_thr)
        report_dict = wl.to_dict()
        report_path = out_dir / "weak_label_report.json"
        report_path.write_text(json.dumps(report_dict, indent=2) + "\n", encoding="utf-8")
        artifacts["weak_label_report"] = str(report_path)

    return _finish(config, "weak-label", started, artifacts, report_dict)


def run_bench(config: PipelineConfig) -> RunRecord:
    """Time inference throughput of a trained handle over a manifest."""
    started = _utcnow()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    handle = load_handle(config.detector_handle)
    manifest = load_manifest(config.datasets["content"])
    records = (
        manifest.subset(manifest.ids("val")).records if manifest.split else manifest.records
    )
    adapter = MiniAdapter()
    fps = benchmark_fps(
        adapter,
        handle,
        records,
        warmup=int(config.bench.get("warmup", 2)),
        runs=int(config.bench.get("runs", 10)),
    )
    artifacts: Dict[str, str] = {}
    report_path = out_dir / "fps_report.json"
    report_path.write_text(json.dumps(fps.to_dict(), indent=2) + "\n", encoding="utf-8")
    artifacts["fps_report"] = str(report_path)
    return _finish(config, "bench", started, artifacts, fps.to_dict())


def run_pipeline(config: PipelineConfig):
    """Dispatch a loaded config to its pipeline runner."""
    if config.deterministic:
        torch.set_num_threads(1)
    runner = {
        "baseline": run_baseline,
        "odsc": run_odsc,
        "sanity-swap": run_sanity_swap,
        "cdmt": run_cdmt,
        "weak-label": run_weak_label,
        "bench": run_bench,
    }[config.pipeline]
    return runner(config)
