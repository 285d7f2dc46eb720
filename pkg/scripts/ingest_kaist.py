#!/usr/bin/env python3
"""Convert a KAIST-layout release (paired lwir/visible frames) into a manifest."""

import argparse
from pathlib import Path

from thermoscope.datasets.kaist import KAIST_CLASSES, parse_kaist_annotations
from thermoscope.datasets.manifest import save_manifest


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("source_dir", type=Path)
    ap.add_argument("out", type=Path)
    ap.add_argument("--classes", nargs="+", default=list(KAIST_CLASSES))
    ap.add_argument("--train-fraction", type=float, default=0.8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    manifest = parse_kaist_annotations(
        args.source_dir,
        class_set=tuple(args.classes),
        train_fraction=args.train_fraction,
        seed=args.seed,
    )
    save_manifest(manifest, args.out)
    frames = {r.image_id.rsplit("/", 1)[0] for r in manifest.records}
    print(f"{len(manifest.records)} records over {len(frames)} frames -> {args.out}")


if __name__ == "__main__":
    main()
