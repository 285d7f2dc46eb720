"""Inference throughput measurement."""

from __future__ import annotations

import platform
import statistics
import time
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import torch

from thermoscope.datasets.types import LabeledImage
from thermoscope.errors import ValidationError


@dataclass(frozen=True)
class FpsReport:
    mean_fps: float
    std_fps: float
    samples: Tuple[float, ...]
    n_images: int
    hardware: str

    def to_dict(self) -> dict:
        return {
            "mean_fps": self.mean_fps,
            "std_fps": self.std_fps,
            "samples": list(self.samples),
            "n_images": self.n_images,
            "hardware": self.hardware,
        }


def benchmark_fps(
    adapter,
    handle,
    records: Sequence[LabeledImage],
    warmup: int = 2,
    runs: int = 10,
    score_threshold: float = 0.5,
) -> FpsReport:
    """Frames per second over ``runs`` timed passes (after ``warmup`` untimed ones).

    Published per-architecture throughput numbers are hardware-bound
    reference context, not assertions; this reports what the current
    machine does.
    """
    if runs < 1:
        raise ValidationError(f"runs must be >= 1, got {runs}")
    if not records:
        raise ValidationError("benchmark needs at least one image")
    for _ in range(max(warmup, 0)):
        adapter.infer(handle, records, score_threshold)
    samples: List[float] = []
    for _ in range(runs):
        start = time.perf_counter()
        adapter.infer(handle, records, score_threshold)
        elapsed = max(time.perf_counter() - start, 1e-9)
        samples.append(len(records) / elapsed)
    mean = statistics.fmean(samples)
    std = statistics.stdev(samples) if len(samples) > 1 else 0.0
    hardware = (
        f"{platform.machine()} cpu, {torch.get_num_threads()} torch thread(s), "
        f"{platform.system().lower()}"
    )
    return FpsReport(
        mean_fps=mean,
        std_fps=std,
        samples=tuple(samples),
        n_images=len(records),
        hardware=hardware,
    )
