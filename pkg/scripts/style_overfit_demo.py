#!/usr/bin/env python3
"""Single-pair overfit run: train the generator on one content/style pair
and watch the objective drop. Quick visual check that the style machinery
optimizes at all; prints the loss trajectory and writes the stylized result.
"""

import argparse
import tempfile
from pathlib import Path

from thermoscope.datasets.manifest import save_manifest
from thermoscope.imaging import load_image, save_image
from thermoscope.pipelines.synthetic import make_toy_corpus
from thermoscope.style.training import StyleTrainConfig, stylize_image, train_msgnet


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--content", type=Path, help="content image (toy frame if omitted)")
    ap.add_argument("--style", type=Path, help="style image (toy frame if omitted)")
    ap.add_argument("--out", type=Path, default=Path("overfit-out"))
    ap.add_argument("--iterations", type=int, default=200)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--width", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    work = Path(tempfile.mkdtemp(prefix="overfit-"))

    if args.content and args.style:
        content_path, style_path = args.content, args.style
    else:
        thermal = make_toy_corpus(work / "t", n_train=1, n_val=0, seed=args.seed,
                                  spectrum="thermal", size=args.size)
        visible = make_toy_corpus(work / "v", n_train=1, n_val=0, seed=args.seed + 1,
                                  spectrum="visible", size=args.size, name="toy-vis")
        content_path = Path(thermal.records[0].path)
        style_path = Path(visible.records[0].path)

    # single-record manifests so each epoch is exactly one iteration
    content = make_single_manifest(content_path, work / "content.json", "content")
    style = make_single_manifest(style_path, work / "style.json", "style")

    config = StyleTrainConfig(
        content_manifest=content,
        style_manifest=style,
        epochs=args.iterations,
        batch_size=1,
        style_sizes=(args.size,),
        content_size=args.size,
        width=args.width,
        seed=args.seed,
    )
    checkpoint, log = train_msgnet(config)
    first, last = log.entries[0], log.entries[-1]
    print(f"iterations: {len(log.entries)}")
    print(f"total objective: {first.total:.4f} -> {last.total:.4f} "
          f"({100 * last.total / first.total:.1f}% of initial)")

    styled = stylize_image(load_image(content_path), load_image(style_path), checkpoint)
    save_image(styled, args.out / "styled.png")
    print(f"stylized image -> {args.out / 'styled.png'}")


def make_single_manifest(image_path: Path, out, name):
    from PIL import Image

    from thermoscope.datasets.manifest import load_manifest
    from thermoscope.datasets.types import DatasetManifest, LabeledImage

    with Image.open(image_path) as im:
        w, h = im.size
    record = LabeledImage(image_id=image_path.stem, path=str(image_path),
                          width=w, height=h, spectrum="thermal", annotations=[])
    manifest = DatasetManifest(name, (), [record], {record.image_id: "train"})
    save_manifest(manifest, out)
    return load_manifest(out)


if __name__ == "__main__":
    main()
