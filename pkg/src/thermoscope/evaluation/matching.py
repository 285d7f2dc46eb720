"""Greedy detection-to-ground-truth matching at a fixed IoU threshold.

Matching convention (the usual VOC devkit one):

* detections are processed in descending confidence, ties broken by
  stable input order;
* each detection takes the highest-IoU candidate ground truth with
  IoU >= threshold, where candidates are the still-unmatched normal
  ground truths plus every difficult one (difficult boxes are never
  consumed);
* a detection whose best candidate is difficult is ignored — no TP
  credit, no FP penalty;
* with no candidate the detection is a false positive;
* FN counts only unmatched non-difficult ground truths.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

from thermoscope.datasets.types import BoundingBox, ObjectAnnotation
from thermoscope.detection.types import Detection
from thermoscope.errors import ValidationError

TP = "tp"
FP = "fp"
IGNORED = "ignored"


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    ix0 = max(a.x_min, b.x_min)
    iy0 = max(a.y_min, b.y_min)
    ix1 = min(a.x_max, b.x_max)
    iy1 = min(a.y_max, b.y_max)
    inter = max(ix1 - ix0, 0.0) * max(iy1 - iy0, 0.0)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


@dataclass(frozen=True)
class MatchResult:
    """Outcome of matching one image's detections of one class.

    ``flags`` and ``order`` are aligned: ``flags[i]`` is the verdict for
    the detection at original index ``order[i]``, and positions run in
    descending-confidence processing order.
    """

    flags: Tuple[str, ...]
    order: Tuple[int, ...]
    gt_matched: Tuple[bool, ...]
    fn: int

    def __post_init__(self) -> None:
        if len(self.flags) != len(self.order):
            raise ValidationError("flags and order must align")
        if self.flags.count(TP) != sum(self.gt_matched):
            raise ValidationError("TP count must equal matched ground-truth count")

    @property
    def tp(self) -> int:
        return self.flags.count(TP)

    @property
    def fp(self) -> int:
        return self.flags.count(FP)


def match_detections(
    detections: Sequence[Detection],
    ground_truths: Sequence[ObjectAnnotation],
    iou_threshold: float = 0.5,
) -> MatchResult:
    """Match one image's detections of a single class against its ground truths."""
    labels = {d.label for d in detections}
    if len(labels) > 1:
        raise ValidationError(f"match_detections takes a single class, got {sorted(labels)}")
    if len({d.image_id for d in detections}) > 1:
        raise ValidationError("match_detections takes detections of a single image")

    order = sorted(range(len(detections)), key=lambda i: -detections[i].confidence)
    matched = [False] * len(ground_truths)
    flags: List[str] = []
    for idx in order:
        det = detections[idx]
        best_iou, best_gt = 0.0, -1
        for g, gt in enumerate(ground_truths):
            if matched[g] and not gt.difficult:
                continue
            overlap = iou(det.box, gt.box)
            if overlap >= iou_threshold and overlap > best_iou:
                best_iou, best_gt = overlap, g
        if best_gt < 0:
            flags.append(FP)
        elif ground_truths[best_gt].difficult:
            flags.append(IGNORED)
        else:
            matched[best_gt] = True
            flags.append(TP)

    fn = sum(1 for g, gt in enumerate(ground_truths) if not gt.difficult and not matched[g])
    return MatchResult(tuple(flags), tuple(order), tuple(matched), fn)
