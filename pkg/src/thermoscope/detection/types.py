"""Scored-box carrier type and its line-delimited JSON exchange format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List

from thermoscope.datasets.types import BoundingBox
from thermoscope.errors import ParseError, ValidationError


@dataclass(frozen=True)
class Detection:
    image_id: str
    box: BoundingBox
    label: str
    confidence: float

    def __post_init__(self) -> None:
        if not isinstance(self.confidence, (int, float)) or not math.isfinite(self.confidence):
            raise ValidationError(f"confidence must be finite, got {self.confidence!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(f"confidence must be in [0, 1], got {self.confidence}")

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "label": self.label,
            "confidence": self.confidence,
            "box": list(self.box.as_tuple()),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Detection":
        try:
            x0, y0, x1, y1 = data["box"]
            return cls(
                image_id=data["image_id"],
                box=BoundingBox(float(x0), float(y0), float(x1), float(y1)),
                label=data["label"],
                confidence=float(data["confidence"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed detection record {data!r}: {exc}") from exc


def save_detections(detections: Iterable[Detection], path: str | Path) -> None:
    """Write detections as line-delimited JSON, one object per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for det in detections:
            fh.write(json.dumps(det.to_dict()) + "\n")


def load_detections(path: str | Path) -> List[Detection]:
    detections = []
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"detections file not found: {path}")
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        detections.append(Detection.from_dict(data))
    return detections
