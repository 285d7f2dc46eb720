"""Average precision over a precision-recall curve, exact in rational arithmetic.

Counts entering the PR curve are small integers, so every recall and
precision value is an exact ``fractions.Fraction``; AP is accumulated in
rationals and converted to float once at the end. This makes the result
bit-for-bit comparable against an independent enumeration oracle instead
of "close to within an epsilon".

Two interpolation modes:

* ``all-point``: area under the right-continuous monotone precision
  envelope (the VOC2010+ integral). Default.
* ``voc2007-11pt``: mean of the envelope sampled at recalls 0.0, 0.1,
  ..., 1.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Sequence, Tuple

from thermoscope.datasets.types import ObjectAnnotation
from thermoscope.detection.types import Detection
from thermoscope.errors import ValidationError
from thermoscope.evaluation.matching import IGNORED, TP, match_detections

AP_MODES = ("all-point", "voc2007-11pt")


@dataclass(frozen=True)
class PRCurve:
    """Ordered (recall, precision) points from cumulative TP/FP counts."""

    recalls: Tuple[float, ...]
    precisions: Tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.recalls) != len(self.precisions):
            raise ValidationError("recalls and precisions must align")
        for r, p in zip(self.recalls, self.precisions):
            if not (0.0 <= r <= 1.0 and 0.0 <= p <= 1.0):
                raise ValidationError(f"PR point ({r}, {p}) outside the unit square")
        if any(b < a for a, b in zip(self.recalls, self.recalls[1:])):
            raise ValidationError("recall must be non-decreasing")


def _count_positives(gts_by_image: Mapping[str, Sequence[ObjectAnnotation]]) -> int:
    return sum(1 for anns in gts_by_image.values() for a in anns if not a.difficult)


def _check_single_class(
    detections: Sequence[Detection], gts_by_image: Mapping[str, Sequence[ObjectAnnotation]]
) -> None:
    det_labels = {d.label for d in detections}
    gt_labels = {a.label for anns in gts_by_image.values() for a in anns}
    if len(det_labels) > 1 or len(gt_labels) > 1:
        raise ValidationError(
            f"average_precision takes a single class, got detections {sorted(det_labels)} "
            f"and ground truths {sorted(gt_labels)}"
        )
    if det_labels and gt_labels and det_labels != gt_labels:
        raise ValidationError(
            f"detection class {det_labels.pop()!r} does not match ground-truth "
            f"class {gt_labels.pop()!r}"
        )


def _pr_points_exact(
    detections: Sequence[Detection],
    gts_by_image: Mapping[str, Sequence[ObjectAnnotation]],
    iou_threshold: float,
    n_positive: int,
) -> List[Tuple[Fraction, Fraction]]:
    """PR points in global descending-confidence order, ignored detections dropped."""
    by_image: Dict[str, List[int]] = {}
    for i, det in enumerate(detections):
        by_image.setdefault(det.image_id, []).append(i)

    flag_by_index: Dict[int, str] = {}
    for image_id, indices in by_image.items():
        dets = [detections[i] for i in indices]
        result = match_detections(dets, gts_by_image.get(image_id, ()), iou_threshold)
        for pos, flag in zip(result.order, result.flags):
            flag_by_index[indices[pos]] = flag

    # Stable sort: confidence ties keep input order, so the curve is reproducible.
    order = sorted(range(len(detections)), key=lambda i: -detections[i].confidence)
    points: List[Tuple[Fraction, Fraction]] = []
    tp = fp = 0
    for i in order:
        flag = flag_by_index[i]
        if flag == IGNORED:
            continue
        if flag == TP:
            tp += 1
        else:
            fp += 1
        points.append((Fraction(tp, n_positive), Fraction(tp, tp + fp)))
    return points


def _all_point_ap(points: Sequence[Tuple[Fraction, Fraction]]) -> Fraction:
    envelope: List[Tuple[Fraction, Fraction]] = []
    best = Fraction(0)
    for r, p in reversed(points):
        best = max(best, p)
        envelope.append((r, best))
    envelope.reverse()
    ap = Fraction(0)
    prev_r = Fraction(0)
    for r, p in envelope:
        ap += (r - prev_r) * p
        prev_r = r
    return ap


def _eleven_point_ap(points: Sequence[Tuple[Fraction, Fraction]]) -> Fraction:
    total = Fraction(0)
    for tenth in range(11):
        level = Fraction(tenth, 10)
        candidates = [p for r, p in points if r >= level]
        total += max(candidates) if candidates else Fraction(0)
    return total / 11


def average_precision(
    detections: Sequence[Detection],
    gts_by_image: Mapping[str, Sequence[ObjectAnnotation]],
    iou_threshold: float = 0.5,
    mode: str = "all-point",
) -> float | None:
    """Single-class AP across a dataset; None when the class has no ground truths.

    ``gts_by_image`` must cover every image of the evaluation split (an
    image with no objects of the class maps to an empty list) so that
    false positives on empty images are counted.
    """
    if mode not in AP_MODES:
        raise ValidationError(f"unknown AP mode {mode!r}, expected one of {AP_MODES}")
    _check_single_class(detections, gts_by_image)
    n_positive = _count_positives(gts_by_image)
    if n_positive == 0:
        return None
    points = _pr_points_exact(detections, gts_by_image, iou_threshold, n_positive)
    if mode == "all-point":
        return float(_all_point_ap(points))
    return float(_eleven_point_ap(points))


def pr_curve(
    detections: Sequence[Detection],
    gts_by_image: Mapping[str, Sequence[ObjectAnnotation]],
    iou_threshold: float = 0.5,
) -> PRCurve:
    _check_single_class(detections, gts_by_image)
    n_positive = _count_positives(gts_by_image)
    if n_positive == 0:
        raise ValidationError("PR curve undefined with zero ground truths")
    points = _pr_points_exact(detections, gts_by_image, iou_threshold, n_positive)
    return PRCurve(
        tuple(float(r) for r, _ in points),
        tuple(float(p) for _, p in points),
    )


def mean_ap(per_class_ap: Mapping[str, float | None]) -> float:
    """Arithmetic mean of per-class APs; absent APs must be excluded by the caller."""
    if not per_class_ap:
        raise ValidationError("mean_ap needs at least one class AP")
    absent = sorted(name for name, ap in per_class_ap.items() if ap is None)
    if absent:
        raise ValidationError(
            f"classes {absent} have no AP (zero ground truths); "
            f"exclude them from the mapping explicitly"
        )
    return math.fsum(per_class_ap.values()) / len(per_class_ap)
