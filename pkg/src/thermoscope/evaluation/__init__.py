"""PASCAL-VOC-style detection evaluation: IoU, greedy matching, AP, mAP."""

from thermoscope.evaluation.ap import (
    AP_MODES,
    PRCurve,
    average_precision,
    mean_ap,
    pr_curve,
)
from thermoscope.evaluation.matching import (
    FP,
    IGNORED,
    TP,
    MatchResult,
    iou,
    match_detections,
)
from thermoscope.evaluation.report import (
    ClassEval,
    EvalReport,
    WeakLabelReport,
    evaluate_detections,
    format_report,
    load_report,
    save_report,
    weak_label_report,
)

__all__ = [
    "AP_MODES",
    "PRCurve",
    "average_precision",
    "mean_ap",
    "pr_curve",
    "FP",
    "IGNORED",
    "TP",
    "MatchResult",
    "iou",
    "match_detections",
    "ClassEval",
    "EvalReport",
    "WeakLabelReport",
    "evaluate_detections",
    "format_report",
    "load_report",
    "save_report",
    "weak_label_report",
]
