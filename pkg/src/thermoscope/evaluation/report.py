"""Dataset-level evaluation reports and the weak-label accounting."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Sequence

from thermoscope.datasets.types import LabeledImage, ObjectAnnotation
from thermoscope.detection.types import Detection
from thermoscope.errors import ParseError, ValidationError
from thermoscope.evaluation.ap import AP_MODES, average_precision, mean_ap
from thermoscope.evaluation.matching import match_detections


@dataclass(frozen=True)
class ClassEval:
    ap: float | None
    gt: int
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class EvalReport:
    """Per-class APs plus match counts for one evaluation run.

    ``map`` averages the classes whose AP is defined; classes with zero
    ground truths carry ``ap=None`` and are excluded (never counted as 0).
    The counts are threshold-free: every detection handed in participates.
    """

    classes: Dict[str, ClassEval]
    map: float | None
    iou_threshold: float
    interpolation: str

    def to_dict(self) -> dict:
        return {
            "classes": {
                name: {"ap": ce.ap, "gt": ce.gt, "tp": ce.tp, "fp": ce.fp, "fn": ce.fn}
                for name, ce in self.classes.items()
            },
            "map": self.map,
            "iou_threshold": self.iou_threshold,
            "interpolation": self.interpolation,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        try:
            classes = {
                name: ClassEval(e["ap"], e["gt"], e["tp"], e["fp"], e["fn"])
                for name, e in data["classes"].items()
            }
            return cls(classes, data["map"], data["iou_threshold"], data["interpolation"])
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed evaluation report: {exc}") from exc


def save_report(report: EvalReport, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_report(path: str | Path) -> EvalReport:
    try:
        return EvalReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read evaluation report {path}: {exc}") from exc


def evaluate_detections(
    detections: Sequence[Detection],
    records: Sequence[LabeledImage],
    class_set: Sequence[str] | None = None,
    iou_threshold: float = 0.5,
    mode: str = "all-point",
) -> EvalReport:
    """Score detections against labeled records, per class and averaged."""
    if mode not in AP_MODES:
        raise ValidationError(f"unknown AP mode {mode!r}, expected one of {AP_MODES}")
    known_ids = {r.image_id for r in records}
    stray = sorted({d.image_id for d in detections} - known_ids)
    if stray:
        raise ValidationError(
            f"detections reference image ids outside the evaluation set: {stray[:5]}"
        )
    if class_set is None:
        class_set = sorted({a.label for r in records for a in r.annotations})

    classes: Dict[str, ClassEval] = {}
    for name in class_set:
        dets_c = [d for d in detections if d.label == name]
        gts_by_image = {
            r.image_id: [a for a in r.annotations if a.label == name] for r in records
        }
        ap = average_precision(dets_c, gts_by_image, iou_threshold, mode)
        tp = fp = fn = gt = 0
        by_image: Dict[str, List[Detection]] = {i: [] for i in known_ids}
        for det in dets_c:
            by_image[det.image_id].append(det)
        for image_id, gts in gts_by_image.items():
            result = match_detections(by_image[image_id], gts, iou_threshold)
            tp += result.tp
            fp += result.fp
            fn += result.fn
            gt += sum(1 for a in gts if not a.difficult)
        classes[name] = ClassEval(ap, gt, tp, fp, fn)

    defined = {name: ce.ap for name, ce in classes.items() if ce.ap is not None}
    overall = mean_ap(defined) if defined else None
    return EvalReport(classes, overall, iou_threshold, mode)


def format_report(report: EvalReport) -> str:
    """Human-readable table: one AP column per class, then the average."""
    names = list(report.classes)
    header = [f"{n:>12}" for n in names] + [f"{'Average mAP':>12}"]
    aps = [
        f"{report.classes[n].ap:>12.4f}" if report.classes[n].ap is not None else f"{'-':>12}"
        for n in names
    ]
    aps.append(f"{report.map:>12.4f}" if report.map is not None else f"{'-':>12}")
    lines = ["".join(header), "".join(aps), ""]
    lines.append(f"{'class':>12}{'GT':>8}{'TP':>8}{'FP':>8}{'FN':>8}")
    for name in names:
        ce = report.classes[name]
        lines.append(f"{name:>12}{ce.gt:>8}{ce.tp:>8}{ce.fp:>8}{ce.fn:>8}")
    lines.append(
        f"IoU threshold {report.iou_threshold}, interpolation {report.interpolation}"
    )
    return "\n".join(lines)


@dataclass(frozen=True)
class WeakLabelReport:
    """TP/FP/FN totals over all classes and images, with pseudo-label accuracy."""

    tp: int
    fp: int
    fn: int
    accuracy: float | None

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "accuracy": self.accuracy}


def weak_label_report(
    detections: Sequence[Detection],
    records: Sequence[LabeledImage],
    iou_threshold: float = 0.5,
) -> WeakLabelReport:
    """Aggregate matching over every class and image.

    accuracy = TP / (TP + FP + FN); absent (None) when there is nothing
    to count on either side.
    """
    labels = sorted(
        {d.label for d in detections} | {a.label for r in records for a in r.annotations}
    )
    by_image: Dict[str, List[Detection]] = {r.image_id: [] for r in records}
    for det in detections:
        if det.image_id not in by_image:
            raise ValidationError(f"detection references unknown image id {det.image_id!r}")
        by_image[det.image_id].append(det)

    tp = fp = fn = 0
    for record in records:
        for name in labels:
            dets = [d for d in by_image[record.image_id] if d.label == name]
            gts = [a for a in record.annotations if a.label == name]
            result = match_detections(dets, gts, iou_threshold)
            tp += result.tp
            fp += result.fp
            fn += result.fn
    denom = tp + fp + fn
    return WeakLabelReport(tp, fp, fn, tp / denom if denom else None)
