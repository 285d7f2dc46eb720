"""Manifest persistence (versioned JSON) and deterministic splitting."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Dict

from thermoscope.datasets.types import (
    BoundingBox,
    DatasetManifest,
    LabeledImage,
    ObjectAnnotation,
)
from thermoscope.errors import ParseError, ValidationError
from thermoscope.rng import substream_rng

SCHEMA_VERSION = 1


def manifest_to_dict(manifest: DatasetManifest) -> Dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": manifest.name,
        "class_set": list(manifest.class_set),
        "records": [
            {
                "image_id": r.image_id,
                "path": r.path,
                "width": r.width,
                "height": r.height,
                "spectrum": r.spectrum,
                "annotations": [
                    {
                        "label": a.label,
                        "difficult": a.difficult,
                        "box": [a.box.x_min, a.box.y_min, a.box.x_max, a.box.y_max],
                    }
                    for a in r.annotations
                ],
            }
            for r in manifest.records
        ],
        "split": dict(manifest.split),
    }


def manifest_from_dict(data: Dict) -> DatasetManifest:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported manifest schema_version {version!r}")
    records = []
    for rec in data["records"]:
        annotations = [
            ObjectAnnotation(BoundingBox(*a["box"]), a["label"], bool(a["difficult"]))
            for a in rec["annotations"]
        ]
        records.append(
            LabeledImage(
                rec["image_id"],
                rec["path"],
                int(rec["width"]),
                int(rec["height"]),
                rec["spectrum"],
                annotations,
            )
        )
    return DatasetManifest(data["name"], list(data["class_set"]), records, dict(data["split"]))


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest_to_dict(manifest), indent=2), encoding="utf-8")


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    if not path.exists():
        raise ParseError(f"manifest file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"manifest {path} is not valid JSON: {exc}") from exc
    return manifest_from_dict(data)


def make_split(
    manifest: DatasetManifest, train_fraction: float, seed: int
) -> DatasetManifest:
    """Assign a deterministic train/val split.

    |train| = round(train_fraction * |records|), half rounded up. The
    returned manifest shares records with the input but owns a new split.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValidationError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if not manifest.records:
        raise ValidationError("cannot split an empty manifest")
    ids = sorted(r.image_id for r in manifest.records)
    rng = substream_rng(seed, "split")
    rng.shuffle(ids)
    n_train = int(math.floor(train_fraction * len(ids) + 0.5))
    split = {img_id: ("train" if i < n_train else "val") for i, img_id in enumerate(ids)}
    return DatasetManifest(manifest.name, list(manifest.class_set), list(manifest.records), split)


def single_spectrum_view(
    manifest: DatasetManifest, spectrum: str, strip_suffix: bool = True
) -> DatasetManifest:
    """Project a paired two-spectrum manifest onto one spectrum.

    Paired manifests name records ``<frame>/<spectrum>``; with
    ``strip_suffix`` the view renames them back to the bare frame id, so the
    thermal and visible views of the same frames share image ids. Split
    membership is carried over per frame.
    """
    records = []
    split = {}
    for rec in manifest.records:
        if rec.spectrum != spectrum:
            continue
        image_id = rec.image_id
        if strip_suffix and image_id.endswith(f"/{spectrum}"):
            image_id = image_id[: -(len(spectrum) + 1)]
        records.append(
            LabeledImage(image_id, rec.path, rec.width, rec.height, rec.spectrum,
                         list(rec.annotations))
        )
        if rec.image_id in manifest.split:
            split[image_id] = manifest.split[rec.image_id]
    return DatasetManifest(
        f"{manifest.name}-{spectrum}", list(manifest.class_set), records, split
    )
