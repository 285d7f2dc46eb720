"""Greedy matching unit tests: IoU values, hand-walked matchings, invariants."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermoscope.datasets.types import BoundingBox, ObjectAnnotation
from thermoscope.detection.types import Detection
from thermoscope.errors import ValidationError
from thermoscope.evaluation.matching import FP, IGNORED, TP, MatchResult, iou, match_detections


def box(x0, y0, x1, y1):
    return BoundingBox(float(x0), float(y0), float(x1), float(y1))


def det(x0, y0, x1, y1, confidence, label="person", image_id="img"):
    return Detection(image_id, box(x0, y0, x1, y1), label, confidence)


def gt(x0, y0, x1, y1, label="person", difficult=False):
    return ObjectAnnotation(box(x0, y0, x1, y1), label, difficult)


def test_iou_identical_box():
    assert iou(box(0, 0, 10, 10), box(0, 0, 10, 10)) == 1.0


def test_iou_disjoint_and_touching():
    assert iou(box(0, 0, 5, 5), box(10, 10, 20, 20)) == 0.0
    # shared edge only: zero intersection area
    assert iou(box(0, 0, 5, 5), box(5, 0, 10, 5)) == 0.0


def test_iou_exact_third():
    # 2x2 squares overlapping in a 1x2 strip: 2 / (4 + 4 - 2)
    assert iou(box(0, 0, 2, 2), box(1, 0, 3, 2)) == 2.0 / 6.0


def test_iou_symmetric():
    a, b = box(0, 0, 7, 3), box(2, 1, 9, 6)
    assert iou(a, b) == iou(b, a)


def test_duplicate_detections_one_tp_one_fp():
    gts = [gt(0, 0, 10, 10)]
    dets = [det(0, 0, 10, 10, 0.9), det(1, 1, 10, 10, 0.8)]
    result = match_detections(dets, gts)
    assert result.flags == (TP, FP)
    assert result.order == (0, 1)
    assert result.gt_matched == (True,)
    assert result.fn == 0
    assert result.tp == 1 and result.fp == 1


def test_processing_order_is_descending_confidence():
    # the weaker detection comes first in the input but is processed second
    gts = [gt(0, 0, 10, 10)]
    dets = [det(1, 1, 10, 10, 0.2), det(0, 0, 10, 10, 0.9)]
    result = match_detections(dets, gts)
    assert result.order == (1, 0)
    assert result.flags == (TP, FP)


def test_detection_takes_highest_iou_ground_truth():
    gts = [gt(0, 0, 10, 10), gt(2, 0, 12, 10)]
    dets = [det(3, 0, 12, 10, 0.9)]
    result = match_detections(dets, gts)
    assert result.gt_matched == (False, True)
    assert result.flags == (TP,)
    assert result.fn == 1


def test_difficult_ground_truth_absorbs_without_consuming():
    gts = [gt(0, 0, 10, 10, difficult=True)]
    dets = [det(0, 0, 10, 10, 0.9), det(1, 1, 10, 10, 0.8)]
    result = match_detections(dets, gts)
    assert result.flags == (IGNORED, IGNORED)
    assert result.tp == 0 and result.fp == 0
    assert result.fn == 0  # difficult boxes are not counted as misses
    assert result.gt_matched == (False,)


def test_normal_ground_truth_preferred_when_higher_iou():
    gts = [gt(0, 0, 10, 10), gt(0, 0, 10, 12, difficult=True)]
    dets = [det(0, 0, 10, 10, 0.9)]
    assert match_detections(dets, gts).flags == (TP,)


def test_difficult_wins_when_higher_iou_then_normal_still_matchable():
    gts = [gt(0, 0, 10, 10), gt(0, 0, 10, 20, difficult=True)]
    dets = [det(0, 0, 10, 19, 0.9), det(0, 0, 10, 11, 0.8)]
    result = match_detections(dets, gts)
    # first detection leans into the difficult box, second takes the normal one
    assert result.flags == (IGNORED, TP)
    assert result.gt_matched == (True, False)


def test_false_negative_counting():
    gts = [gt(0, 0, 10, 10), gt(20, 20, 30, 30), gt(40, 40, 50, 50, difficult=True)]
    dets = [det(0, 0, 10, 10, 0.9)]
    result = match_detections(dets, gts)
    assert result.tp == 1
    assert result.fn == 1


def test_below_threshold_is_false_positive():
    gts = [gt(0, 0, 10, 10)]
    dets = [det(6, 0, 10, 10, 0.9)]  # IoU 0.4
    assert match_detections(dets, gts, iou_threshold=0.5).flags == (FP,)
    assert match_detections(dets, gts, iou_threshold=0.4).flags == (TP,)


def test_no_detections_all_ground_truths_missed():
    result = match_detections([], [gt(0, 0, 10, 10), gt(20, 20, 30, 30)])
    assert result.flags == () and result.fn == 2


def test_mixed_classes_rejected():
    dets = [det(0, 0, 10, 10, 0.9, label="person"), det(0, 0, 10, 10, 0.8, label="car")]
    with pytest.raises(ValidationError, match="single class"):
        match_detections(dets, [])


def test_mixed_images_rejected():
    dets = [det(0, 0, 10, 10, 0.9, image_id="a"), det(0, 0, 10, 10, 0.8, image_id="b")]
    with pytest.raises(ValidationError, match="single image"):
        match_detections(dets, [])


def test_match_result_consistency_enforced():
    with pytest.raises(ValidationError, match="align"):
        MatchResult((TP,), (0, 1), (True,), 0)
    with pytest.raises(ValidationError, match="TP count"):
        MatchResult((TP, TP), (0, 1), (True,), 0)


grid_boxes = st.tuples(
    st.integers(0, 5), st.integers(0, 5), st.integers(1, 4), st.integers(1, 4)
).map(lambda t: box(t[0], t[1], t[0] + t[2], t[1] + t[3]))


@settings(max_examples=60)
@given(
    det_boxes=st.lists(grid_boxes, max_size=5),
    confs=st.lists(st.floats(0.05, 0.95), min_size=5, max_size=5),
    gt_boxes=st.lists(grid_boxes, max_size=3),
    thresholds=st.tuples(st.floats(0.1, 0.9), st.floats(0.1, 0.9)),
)
def test_raising_threshold_never_adds_true_positives(det_boxes, confs, gt_boxes, thresholds):
    dets = [
        Detection("img", b, "person", confs[i]) for i, b in enumerate(det_boxes)
    ]
    gts = [ObjectAnnotation(b, "person") for b in gt_boxes]
    low, high = sorted(thresholds)
    assert match_detections(dets, gts, high).tp <= match_detections(dets, gts, low).tp


@settings(max_examples=60)
@given(
    det_boxes=st.lists(grid_boxes, max_size=5),
    confs=st.lists(st.floats(0.05, 0.95), min_size=5, max_size=5),
    gt_boxes=st.lists(grid_boxes, max_size=3),
)
def test_flag_accounting_closes(det_boxes, confs, gt_boxes):
    dets = [Detection("img", b, "person", confs[i]) for i, b in enumerate(det_boxes)]
    gts = [ObjectAnnotation(b, "person") for b in gt_boxes]
    result = match_detections(dets, gts)
    assert result.tp + result.fp + result.flags.count(IGNORED) == len(dets)
    assert result.tp + result.fn == len(gts)
    assert sorted(result.order) == list(range(len(dets)))
