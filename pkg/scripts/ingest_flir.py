#!/usr/bin/env python3
"""Convert a FLIR-layout release (COCO-style index) into a manifest JSON.

Expects either train/ and val/ subdirectories each holding an annotation
index, or a single index at the root (split taken from split.json when
present, otherwise drawn reproducibly from --seed).
"""

import argparse
from collections import Counter
from pathlib import Path

from thermoscope.datasets.flir import FLIR_CLASSES, parse_flir_annotations
from thermoscope.datasets.manifest import save_manifest


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("source_dir", type=Path)
    ap.add_argument("out", type=Path, help="manifest JSON path")
    ap.add_argument("--classes", nargs="+", default=list(FLIR_CLASSES))
    ap.add_argument("--train-fraction", type=float, default=0.8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    manifest = parse_flir_annotations(
        args.source_dir,
        class_set=tuple(args.classes),
        train_fraction=args.train_fraction,
        seed=args.seed,
    )
    save_manifest(manifest, args.out)
    labels = Counter(a.label for r in manifest.records for a in r.annotations)
    print(f"{len(manifest.records)} images -> {args.out}")
    for label, n in sorted(labels.items()):
        print(f"  {label}: {n}")


if __name__ == "__main__":
    main()
