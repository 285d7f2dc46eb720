"""Detector contract: registered configurations, training, inference, timing."""

from thermoscope.detection.bench import FpsReport, benchmark_fps
from thermoscope.detection.detector import (
    MiniDetectorHandle,
    infer_reference_mini,
    load_handle,
    save_handle,
    train_reference_mini,
)
from thermoscope.detection.registry import (
    CDMT_LEARNING_RATES,
    REGISTERED_COMBOS,
    DetectorSpec,
    ExternalAdapter,
    MiniAdapter,
    register_detector,
    set_external_factory,
)
from thermoscope.detection.types import Detection, load_detections, save_detections

__all__ = [
    "FpsReport",
    "benchmark_fps",
    "MiniDetectorHandle",
    "infer_reference_mini",
    "load_handle",
    "save_handle",
    "train_reference_mini",
    "CDMT_LEARNING_RATES",
    "REGISTERED_COMBOS",
    "DetectorSpec",
    "ExternalAdapter",
    "MiniAdapter",
    "register_detector",
    "set_external_factory",
    "Detection",
    "load_detections",
    "save_detections",
]
