"""Synthetic shape corpus with a deliberate visible/thermal domain shift.

Every pipeline needs a CI-runnable instantiation, so this renders simple
geometric objects (car = wide rectangle, person = tall rectangle,
bicycle = disk) under two palettes:

* visible: bright tinted objects on a dark background, light noise;
* thermal: inverted polarity (dark objects, bright background), heavier
  noise, gray channels.

The inversion is the injected domain shift: a detector trained on one
palette degrades hard on the other, which is what the cross-domain
pipelines are built to measure. Paired mode renders the same geometry
in both palettes under shared frame ids, mirroring a dual-spectrum
capture rig.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from thermoscope.datasets.types import (
    BoundingBox,
    DatasetManifest,
    LabeledImage,
    ObjectAnnotation,
)
from thermoscope.imaging import save_image
from thermoscope.rng import substream_rng

TOY_CLASSES = ("car", "bicycle", "person")


def _sample_objects(rng: np.random.Generator, size: int) -> List[Tuple[str, Tuple[float, float, float, float]]]:
    objects = []
    n = int(rng.integers(1, 4))
    for _ in range(n):
        label = TOY_CLASSES[int(rng.integers(len(TOY_CLASSES)))]
        if label == "car":
            w = float(rng.uniform(18, 26))
            h = float(rng.uniform(10, 14))
        elif label == "person":
            w = float(rng.uniform(8, 12))
            h = float(rng.uniform(18, 26))
        else:  # bicycle: disk, box is its square bound
            r = float(rng.uniform(6, 9))
            w = h = 2 * r
        x0 = float(rng.uniform(2, size - w - 2))
        y0 = float(rng.uniform(2, size - h - 2))
        objects.append((label, (x0, y0, x0 + w, y0 + h)))
    return objects


def _rasterize(
    objects: Sequence[Tuple[str, Tuple[float, float, float, float]]],
    spectrum: str,
    rng: np.random.Generator,
    size: int,
) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size]
    if spectrum == "visible":
        background = rng.uniform(0.10, 0.22)
        noise_sigma = 0.02
    else:
        background = rng.uniform(0.75, 0.90)
        noise_sigma = 0.06
    img = np.full((3, size, size), background, dtype=np.float32)
    for label, (x0, y0, x1, y1) in objects:
        if spectrum == "visible":
            value = rng.uniform(0.75, 0.95, size=3)  # tinted bright object
        else:
            value = np.full(3, rng.uniform(0.08, 0.28))  # dark, gray
        if label == "bicycle":
            cx, cy, r = (x0 + x1) / 2, (y0 + y1) / 2, (x1 - x0) / 2
            mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
        else:
            mask = (xx >= x0) & (xx < x1) & (yy >= y0) & (yy < y1)
        for c in range(3):
            img[c][mask] = value[c]
    img += rng.normal(0.0, noise_sigma, size=img.shape).astype(np.float32)
    return np.clip(img, 0.0, 1.0)


def _frame_records(
    frame: str,
    objects,
    spectra: Sequence[str],
    out_dir: Path,
    rng: np.random.Generator,
    size: int,
    paired: bool,
) -> List[LabeledImage]:
    annotations = [ObjectAnnotation(BoundingBox(*box), label) for label, box in objects]
    records = []
    for spectrum in spectra:
        img = _rasterize(objects, spectrum, rng, size)
        image_id = f"{frame}/{spectrum}" if paired else frame
        path = out_dir / f"{image_id}.png"
        save_image(img, path)
        records.append(
            LabeledImage(
                image_id=image_id,
                path=str(path),
                width=size,
                height=size,
                spectrum=spectrum,
                annotations=list(annotations),
            )
        )
    return records


def make_toy_corpus(
    out_dir: str | Path,
    n_train: int = 10,
    n_val: int = 10,
    seed: int = 0,
    spectrum: str = "thermal",
    size: int = 64,
    name: str = "toy",
) -> DatasetManifest:
    """Single-spectrum corpus with an explicit train/val split."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records: List[LabeledImage] = []
    split: Dict[str, str] = {}
    for i in range(n_train + n_val):
        frame = f"frame{i:04d}"
        rng = substream_rng(seed, f"toy:{name}:{frame}")
        objects = _sample_objects(rng, size)
        recs = _frame_records(frame, objects, [spectrum], out_dir, rng, size, paired=False)
        records.extend(recs)
        split[frame] = "train" if i < n_train else "val"
    return DatasetManifest(name, list(TOY_CLASSES), records, split)


def make_paired_toy_corpus(
    out_dir: str | Path,
    n_train: int = 10,
    n_val: int = 10,
    seed: int = 0,
    size: int = 64,
    name: str = "toy-paired",
) -> DatasetManifest:
    """Dual-spectrum corpus: same geometry per frame in both palettes.

    Record ids are ``<frame>/<spectrum>``; both members of a pair share
    the annotation list and the split label, so the single-spectrum views
    line up frame for frame.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records: List[LabeledImage] = []
    split: Dict[str, str] = {}
    for i in range(n_train + n_val):
        frame = f"frame{i:04d}"
        rng = substream_rng(seed, f"toy:{name}:{frame}")
        objects = _sample_objects(rng, size)
        recs = _frame_records(
            frame, objects, ["thermal", "visible"], out_dir, rng, size, paired=True
        )
        records.extend(recs)
        part = "train" if i < n_train else "val"
        for rec in recs:
            split[rec.image_id] = part
    return DatasetManifest(name, list(TOY_CLASSES), records, split)
