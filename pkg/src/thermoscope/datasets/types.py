"""Core dataset records: boxes, annotations, labeled images, manifests.

Boxes use corner coordinates (x_min, y_min, x_max, y_max) in continuous
pixels, origin at the top-left of the image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

from thermoscope.errors import ValidationError

SPECTRA = ("thermal", "visible")
SPLITS = ("train", "val")

FLIR_CLASSES = ("car", "bicycle", "person")
KAIST_CLASSES = ("person",)


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        for v in (self.x_min, self.y_min, self.x_max, self.y_max):
            if not math.isfinite(v):
                raise ValidationError(f"non-finite box coordinate in {self.as_tuple()}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValidationError(f"degenerate box {self.as_tuple()}")
        if self.x_min < 0 or self.y_min < 0:
            raise ValidationError(f"negative box coordinate in {self.as_tuple()}")

    def as_tuple(self) -> tuple:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def fits_inside(self, width: float, height: float) -> bool:
        return self.x_max <= width and self.y_max <= height


@dataclass(frozen=True)
class ObjectAnnotation:
    box: BoundingBox
    label: str
    difficult: bool = False


@dataclass
class LabeledImage:
    image_id: str
    path: str
    width: int
    height: int
    spectrum: str
    annotations: List[ObjectAnnotation] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValidationError(
                f"image {self.image_id!r}: non-positive size {self.width}x{self.height}"
            )
        if self.spectrum not in SPECTRA:
            raise ValidationError(
                f"image {self.image_id!r}: unknown spectrum {self.spectrum!r}"
            )
        for ann in self.annotations:
            if not ann.box.fits_inside(self.width, self.height):
                raise ValidationError(
                    f"image {self.image_id!r}: box {ann.box.as_tuple()} exceeds "
                    f"image size {self.width}x{self.height}"
                )


@dataclass
class DatasetManifest:
    name: str
    class_set: List[str]
    records: List[LabeledImage] = field(default_factory=list)
    split: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        seen = set()
        for rec in self.records:
            if rec.image_id in seen:
                raise ValidationError(f"duplicate image_id {rec.image_id!r}")
            seen.add(rec.image_id)
            for ann in rec.annotations:
                if ann.label not in self.class_set:
                    raise ValidationError(
                        f"image {rec.image_id!r}: label {ann.label!r} outside "
                        f"class set {self.class_set}"
                    )
        if self.split:
            if set(self.split) != seen:
                missing = seen - set(self.split)
                extra = set(self.split) - seen
                raise ValidationError(
                    f"split does not partition the records "
                    f"(missing={sorted(missing)[:3]}, extra={sorted(extra)[:3]})"
                )
            bad = {s for s in self.split.values() if s not in SPLITS}
            if bad:
                raise ValidationError(f"unknown split labels {sorted(bad)}")

    def ids(self, split: str | None = None) -> List[str]:
        if split is None:
            return [r.image_id for r in self.records]
        return [r.image_id for r in self.records if self.split.get(r.image_id) == split]

    def subset(self, ids: Sequence[str]) -> "DatasetManifest":
        """New manifest restricted to ``ids`` (split entries carried over)."""
        wanted = set(ids)
        records = [r for r in self.records if r.image_id in wanted]
        split = {r.image_id: self.split[r.image_id] for r in records if r.image_id in self.split}
        return DatasetManifest(self.name, list(self.class_set), records, split)

    def by_id(self) -> Dict[str, LabeledImage]:
        return {r.image_id: r for r in self.records}
