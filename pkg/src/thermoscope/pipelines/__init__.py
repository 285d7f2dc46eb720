"""Experiment orchestration: configs, run records, the six pipelines."""

from thermoscope.pipelines.config import (
    PIPELINES,
    PipelineConfig,
    RunRecord,
    hash_inputs,
    load_config,
    sha256_file,
)
from thermoscope.pipelines.runs import (
    run_baseline,
    run_bench,
    run_cdmt,
    run_odsc,
    run_pipeline,
    run_sanity_swap,
    run_weak_label,
)
from thermoscope.pipelines.synthetic import (
    TOY_CLASSES,
    make_paired_toy_corpus,
    make_toy_corpus,
)

__all__ = [
    "PIPELINES",
    "PipelineConfig",
    "RunRecord",
    "hash_inputs",
    "load_config",
    "sha256_file",
    "run_baseline",
    "run_bench",
    "run_cdmt",
    "run_odsc",
    "run_pipeline",
    "run_sanity_swap",
    "run_weak_label",
    "TOY_CLASSES",
    "make_paired_toy_corpus",
    "make_toy_corpus",
]
