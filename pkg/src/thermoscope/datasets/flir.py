"""FLIR-ADAS-style ingestion: COCO-style JSON index -> manifest.

Consumed layout (the public release shape), rooted at ``source_dir``:

    train/thermal_annotations.json   + images referenced by file_name
    val/thermal_annotations.json

When ``train/`` and ``val/`` index files are both present they define the
distributed standard split. A flat tree with a single index at the root
falls back to a deterministic random split. An explicit ``split.json``
(``{"train": [ids], "val": [ids]}``) next to the root index overrides both.

The index is COCO-style JSON: ``images[{id, file_name, width, height}]``,
``annotations[{image_id, category_id, bbox:[x,y,w,h]}]``,
``categories[{id, name}]``. Image files are referenced by path and not
opened here; pixel access happens in the training modules.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

from thermoscope.datasets.manifest import make_split
from thermoscope.datasets.types import (
    BoundingBox,
    DatasetManifest,
    FLIR_CLASSES,
    LabeledImage,
    ObjectAnnotation,
)
from thermoscope.errors import ParseError

logger = logging.getLogger(__name__)

INDEX_NAMES = ("thermal_annotations.json", "annotations.json")


def _find_index(directory: Path) -> Path | None:
    for name in INDEX_NAMES:
        candidate = directory / name
        if candidate.is_file():
            return candidate
    return None


def _parse_index(
    index_path: Path, image_root: Path, class_set: Sequence[str]
) -> Tuple[List[LabeledImage], int]:
    """Parse one COCO-style index. Returns (records, n_skipped_labels)."""
    try:
        data = json.loads(index_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"annotation index {index_path} is not valid JSON: {exc}") from exc

    categories = {c["id"]: str(c["name"]).lower() for c in data.get("categories", [])}
    images: Dict[int, dict] = {}
    for img in data.get("images", []):
        if "id" not in img or "file_name" not in img:
            raise ParseError(f"{index_path}: image entry missing id/file_name: {img!r}")
        images[img["id"]] = img

    boxes_by_image: Dict[int, List[ObjectAnnotation]] = {i: [] for i in images}
    skipped = 0
    for ann in data.get("annotations", []):
        img_id = ann.get("image_id")
        if img_id not in images:
            raise ParseError(f"{index_path}: annotation references unknown image id {img_id!r}")
        stem = Path(images[img_id]["file_name"]).stem
        label = categories.get(ann.get("category_id"))
        if label is None:
            raise ParseError(
                f"{index_path}: image {stem!r} has an annotation with unknown "
                f"category_id {ann.get('category_id')!r}"
            )
        if label not in class_set:
            skipped += 1
            continue
        bbox = ann.get("bbox")
        if not isinstance(bbox, (list, tuple)) or len(bbox) != 4:
            raise ParseError(f"{index_path}: image {stem!r} has malformed bbox {bbox!r}")
        x, y, w, h = (float(v) for v in bbox)
        width = int(images[img_id].get("width", 0))
        height = int(images[img_id].get("height", 0))
        # Real indexes are noisy: clamp overhang, skip boxes with no interior.
        x0, y0 = max(x, 0.0), max(y, 0.0)
        x1, y1 = min(x + w, float(width)), min(y + h, float(height))
        if x1 <= x0 or y1 <= y0:
            skipped += 1
            continue
        boxes_by_image[img_id].append(ObjectAnnotation(BoundingBox(x0, y0, x1, y1), label))

    records = []
    for img_id, img in images.items():
        stem = Path(img["file_name"]).stem
        try:
            records.append(
                LabeledImage(
                    image_id=stem,
                    path=str(image_root / img["file_name"]),
                    width=int(img["width"]),
                    height=int(img["height"]),
                    spectrum="thermal",
                    annotations=boxes_by_image[img_id],
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{index_path}: malformed record for image {stem!r}: {exc}") from exc
    return records, skipped


def parse_flir_annotations(
    source_dir: str | Path,
    class_set: Sequence[str] = FLIR_CLASSES,
    train_fraction: float = 0.8,
    seed: int = 0,
) -> DatasetManifest:
    """Build a thermal manifest from a FLIR-ADAS-style tree.

    Annotations outside ``class_set`` (the dog category in the stock data)
    are dropped with a counted warning. ``train_fraction``/``seed`` only
    apply when the tree carries no standard split of its own.
    """
    source_dir = Path(source_dir)
    split_dirs = [d for d in ("train", "val") if (source_dir / d).is_dir() and _find_index(source_dir / d)]

    records: List[LabeledImage] = []
    split: Dict[str, str] = {}
    skipped = 0
    if split_dirs:
        for part in split_dirs:
            part_dir = source_dir / part
            index = _find_index(part_dir)
            part_records, part_skipped = _parse_index(index, part_dir, class_set)
            skipped += part_skipped
            records.extend(part_records)
            split.update({r.image_id: part for r in part_records})
        manifest = DatasetManifest(source_dir.name or "flir", list(class_set), records, split)
    else:
        index = _find_index(source_dir)
        if index is None:
            raise ParseError(
                f"no annotation index found under {source_dir} "
                f"(looked for {', '.join(INDEX_NAMES)} at the root and in train/, val/)"
            )
        records, skipped = _parse_index(index, source_dir, class_set)
        manifest = DatasetManifest(source_dir.name or "flir", list(class_set), records, {})
        manifest = _apply_fallback_split(manifest, source_dir, train_fraction, seed)

    if skipped:
        logger.warning("%s: skipped %d annotations outside class set %s",
                       source_dir, skipped, list(class_set))
    return manifest


def _apply_fallback_split(
    manifest: DatasetManifest, source_dir: Path, train_fraction: float, seed: int
) -> DatasetManifest:
    explicit = source_dir / "split.json"
    if explicit.is_file():
        assignment = json.loads(explicit.read_text(encoding="utf-8"))
        split = {}
        for part in ("train", "val"):
            for image_id in assignment.get(part, []):
                split[image_id] = part
        return DatasetManifest(manifest.name, list(manifest.class_set), manifest.records, split)
    if not manifest.records:
        return manifest
    return make_split(manifest, train_fraction, seed)
