"""KAIST-style paired ingestion: per-frame text annotations -> manifest.

Consumed layout, rooted at ``source_dir`` (optionally under ``train/`` and
``val/`` when the tree carries a standard split):

    annotations/<frame>.txt          one "label x y w h ..." line per object
    images/visible/<frame>.png
    images/lwir/<frame>.png

``<frame>`` may be nested (set/video/frame); nesting is preserved in the
frame id with "/" separators. Every frame must have both spectrum images
and both must agree on size; an unpaired or mismatched frame is an error
naming it. The produced manifest holds two records per frame with ids
``<frame>/thermal`` and ``<frame>/visible`` sharing one annotation list,
so the two single-spectrum views line up frame for frame.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from PIL import Image

from thermoscope.datasets.types import (
    BoundingBox,
    DatasetManifest,
    KAIST_CLASSES,
    LabeledImage,
    ObjectAnnotation,
)
from thermoscope.errors import ParseError
from thermoscope.rng import substream_rng

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


def _find_image(directory: Path, frame: str) -> Path | None:
    for suffix in IMAGE_SUFFIXES:
        candidate = directory / (frame + suffix)
        if candidate.is_file():
            return candidate
    return None


def _read_size(path: Path) -> Tuple[int, int]:
    with Image.open(path) as img:
        return img.size  # (width, height)


def _parse_annotation_file(
    path: Path, frame: str, width: int, height: int, class_set: Sequence[str]
) -> Tuple[List[ObjectAnnotation], int]:
    annotations: List[ObjectAnnotation] = []
    skipped = 0
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("%"):  # the stock files open with a % header
            continue
        fields = line.split()
        if len(fields) < 5:
            raise ParseError(f"frame {frame!r}: malformed annotation at {path}:{lineno}: {line!r}")
        label = fields[0].lower()
        if label not in class_set:
            skipped += 1
            continue
        try:
            x, y, w, h = (float(v) for v in fields[1:5])
        except ValueError as exc:
            raise ParseError(
                f"frame {frame!r}: non-numeric box at {path}:{lineno}: {line!r}"
            ) from exc
        x0, y0 = max(x, 0.0), max(y, 0.0)
        x1, y1 = min(x + w, float(width)), min(y + h, float(height))
        if x1 <= x0 or y1 <= y0:
            skipped += 1
            continue
        annotations.append(ObjectAnnotation(BoundingBox(x0, y0, x1, y1), label))
    return annotations, skipped


def _parse_tree(
    root: Path, class_set: Sequence[str]
) -> Tuple[List[str], Dict[str, List[LabeledImage]], int]:
    """Parse one annotations/images tree. Returns (frames, records_by_frame, skipped)."""
    ann_dir = root / "annotations"
    if not ann_dir.is_dir():
        raise ParseError(f"no annotations/ directory under {root}")
    visible_dir = root / "images" / "visible"
    thermal_dir = root / "images" / "lwir"

    frames = sorted(
        p.relative_to(ann_dir).with_suffix("").as_posix() for p in ann_dir.rglob("*.txt")
    )
    if not frames:
        raise ParseError(f"no annotation files under {ann_dir}")

    by_frame: Dict[str, List[LabeledImage]] = {}
    skipped = 0
    for frame in frames:
        thermal_path = _find_image(thermal_dir, frame)
        visible_path = _find_image(visible_dir, frame)
        if thermal_path is None or visible_path is None:
            missing = "lwir" if thermal_path is None else "visible"
            raise ParseError(f"frame {frame!r} is unpaired: no {missing} image under {root}/images")
        width, height = _read_size(thermal_path)
        vis_size = _read_size(visible_path)
        if vis_size != (width, height):
            raise ParseError(
                f"frame {frame!r}: spectrum size mismatch, lwir {width}x{height} "
                f"vs visible {vis_size[0]}x{vis_size[1]}"
            )
        annotations, frame_skipped = _parse_annotation_file(
            ann_dir / (frame + ".txt"), frame, width, height, class_set
        )
        skipped += frame_skipped
        by_frame[frame] = [
            LabeledImage(f"{frame}/thermal", str(thermal_path), width, height, "thermal", annotations),
            LabeledImage(f"{frame}/visible", str(visible_path), width, height, "visible", list(annotations)),
        ]
    return frames, by_frame, skipped


def parse_kaist_annotations(
    source_dir: str | Path,
    class_set: Sequence[str] = KAIST_CLASSES,
    train_fraction: float = 0.8,
    seed: int = 0,
) -> DatasetManifest:
    """Build a paired thermal+visible manifest from a KAIST-style tree.

    Split comes from ``train/``/``val/`` subtrees when present, else frames
    are assigned by a seeded shuffle at ``train_fraction`` (pairs are never
    separated: both spectra of a frame land in the same split). Labels
    outside ``class_set`` are dropped with a counted warning.
    """
    source_dir = Path(source_dir)
    split_dirs = [d for d in ("train", "val") if (source_dir / d / "annotations").is_dir()]

    records: List[LabeledImage] = []
    split: Dict[str, str] = {}
    skipped = 0
    if split_dirs:
        for part in split_dirs:
            frames, by_frame, part_skipped = _parse_tree(source_dir / part, class_set)
            skipped += part_skipped
            for frame in frames:
                records.extend(by_frame[frame])
                for record in by_frame[frame]:
                    split[record.image_id] = part
    else:
        frames, by_frame, skipped = _parse_tree(source_dir, class_set)
        order = list(frames)
        substream_rng(seed, "split").shuffle(order)
        n_train = int(len(order) * train_fraction + 0.5)
        for i, frame in enumerate(order):
            part = "train" if i < n_train else "val"
            for record in by_frame[frame]:
                split[record.image_id] = part
        for frame in frames:
            records.extend(by_frame[frame])

    if skipped:
        logger.warning("%s: skipped %d annotations outside class set %s",
                       source_dir, skipped, list(class_set))
    return DatasetManifest(source_dir.name or "kaist", list(class_set), records, split)
