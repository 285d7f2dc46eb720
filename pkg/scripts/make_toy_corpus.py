#!/usr/bin/env python3
"""Generate the synthetic domain-shift corpus used by the smoke experiments."""

import argparse
from pathlib import Path

from thermoscope.datasets.manifest import save_manifest
from thermoscope.pipelines.synthetic import make_paired_toy_corpus, make_toy_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--n-train", type=int, default=10)
    ap.add_argument("--n-val", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument(
        "--paired", action="store_true",
        help="emit one visible and one thermal rendering per frame",
    )
    ap.add_argument(
        "--spectrum", choices=("thermal", "visible"), default="thermal",
        help="single-spectrum palette (ignored with --paired)",
    )
    args = ap.parse_args()

    if args.paired:
        manifest = make_paired_toy_corpus(
            args.out_dir / "images", n_train=args.n_train, n_val=args.n_val,
            seed=args.seed, size=args.size,
        )
    else:
        manifest = make_toy_corpus(
            args.out_dir / "images", n_train=args.n_train, n_val=args.n_val,
            seed=args.seed, spectrum=args.spectrum, size=args.size,
        )
    path = args.out_dir / "manifest.json"
    save_manifest(manifest, path)
    n_train = sum(1 for s in manifest.split.values() if s == "train")
    print(f"{len(manifest.records)} records ({n_train} train) -> {path}")


if __name__ == "__main__":
    main()
