"""Seed substreams: all randomness in a run flows from one master seed.

Each consumer derives its own independent stream by name, so adding or
reordering consumers never perturbs the others.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK_63 = (1 << 63) - 1


def substream_seed(master_seed: int, name: str) -> int:
    """Derive a stable 63-bit seed for the named substream."""
    digest = hashlib.sha256(f"{master_seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & _MASK_63


def substream_rng(master_seed: int, name: str) -> np.random.Generator:
    """NumPy generator seeded from the named substream."""
    return np.random.default_rng(substream_seed(master_seed, name))
