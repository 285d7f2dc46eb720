"""Command-line entry point.

    thermoscope <pipeline> --config <file> [--out DIR] [--seed N] [--deterministic]

Pipeline subcommands: baseline, odsc, sanity-swap, cdmt, weak-label,
bench. Standalone tools: style-train, stylize, eval.

Exit codes: 0 success, 2 configuration error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from thermoscope.errors import ConfigError, ThermoscopeError
from thermoscope.pipelines.config import PIPELINES, load_config
from thermoscope.pipelines.runs import run_pipeline


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="override out_dir from the config")
    parser.add_argument("--seed", type=int, help="override seed from the config")
    parser.add_argument(
        "--deterministic",
        action="store_true",
        default=None,
        help="pin threads and serial order (reproducible bitwise)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermoscope",
        description="Domain-adaptation toolkit for thermal object detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in PIPELINES:
        p = sub.add_parser(name, help=f"run the {name} pipeline")
        _add_common(p)

    p = sub.add_parser("style-train", help="train the style generator standalone")
    p.add_argument("--content-manifest", required=True)
    p.add_argument("--style-manifest", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--style-sizes", type=int, nargs="+", default=[256, 512, 768])
    p.add_argument("--content-size", type=int, default=256)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("stylize", help="stylize a manifest with a trained checkpoint")
    p.add_argument("--manifest", required=True, help="content manifest JSON")
    p.add_argument("--style-manifest", required=True, help="style source manifest JSON")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("eval", help="score a detections file against a manifest")
    p.add_argument("--detections", required=True, help="line-delimited JSON detections")
    p.add_argument("--manifest", required=True, help="labeled manifest JSON")
    p.add_argument("--split", default="val", help="which split to score (default val)")
    p.add_argument("--iou-threshold", type=float, default=0.5)
    p.add_argument(
        "--interpolation", choices=["all-point", "voc2007-11pt"], default="all-point"
    )
    p.add_argument("--out", help="write the report JSON here")
    return parser


def _run_pipeline_command(args) -> int:
    config = load_config(args.config)
    if args.out:
        config.out_dir = args.out
    if args.seed is not None:
        config.seed = args.seed
    if args.deterministic is not None:
        config.deterministic = True
    if config.pipeline != args.command:
        raise ConfigError(
            f"config names pipeline {config.pipeline!r} but the "
            f"{args.command!r} subcommand was invoked"
        )
    result = run_pipeline(config)
    records = result if isinstance(result, tuple) else (result,)
    for record in records:
        print(f"[{record.pipeline}] finished; artifacts in {config.out_dir}")
        if record.report and "map" in record.report:
            map_value = record.report["map"]
            shown = f"{map_value:.4f}" if map_value is not None else "undefined"
            print(f"  mAP: {shown}")
    return 0


def _run_style_train(args) -> int:
    from thermoscope.datasets.manifest import load_manifest
    from thermoscope.style.training import StyleTrainConfig, save_checkpoint, train_msgnet

    config = StyleTrainConfig(
        content_manifest=load_manifest(args.content_manifest),
        style_manifest=load_manifest(args.style_manifest),
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        style_sizes=tuple(args.style_sizes),
        content_size=args.content_size,
        width=args.width,
        seed=args.seed,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint, _log = train_msgnet(config, log_path=out_dir / "style_train_log.ndjson")
    save_checkpoint(checkpoint, out_dir / "style_checkpoint.tsc")
    print(f"checkpoint written to {out_dir / 'style_checkpoint.tsc'}")
    return 0


def _run_stylize(args) -> int:
    from thermoscope.datasets.manifest import load_manifest, save_manifest
    from thermoscope.style.training import load_checkpoint, stylize_dataset

    manifest = load_manifest(args.manifest)
    style = load_manifest(args.style_manifest)
    checkpoint = load_checkpoint(args.checkpoint)
    out_dir = Path(args.out)
    styled = stylize_dataset(manifest, style, checkpoint, out_dir / "images", seed=args.seed)
    save_manifest(styled, out_dir / "styled_manifest.json")
    print(f"styled manifest written to {out_dir / 'styled_manifest.json'}")
    return 0


def _run_eval(args) -> int:
    from thermoscope.datasets.manifest import load_manifest
    from thermoscope.detection.types import load_detections
    from thermoscope.evaluation.report import evaluate_detections, format_report, save_report

    manifest = load_manifest(args.manifest)
    records = (
        manifest.subset(manifest.ids(args.split)).records if manifest.split else manifest.records
    )
    detections = load_detections(args.detections)
    report = evaluate_detections(
        detections, records, manifest.class_set, args.iou_threshold, args.interpolation
    )
    print(format_report(report))
    if args.out:
        save_report(report, args.out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in PIPELINES:
            return _run_pipeline_command(args)
        if args.command == "style-train":
            return _run_style_train(args)
        if args.command == "stylize":
            return _run_stylize(args)
        if args.command == "eval":
            return _run_eval(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ThermoscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
