"""Versioned binary container for named tensors plus a JSON metadata header.

Layout (little-endian):
    bytes 0..7    magic b"TSCPNT01"
    bytes 8..15   uint64 header length in bytes
    header        UTF-8 JSON: {"format_version": 1, "metadata": {...},
                  "tensors": [{"name", "dtype", "shape", "offset", "nbytes"}]}
    payload       raw tensor buffers, C-order, concatenated at the offsets
                  recorded in the header (relative to payload start)

Bytes round-trip exactly, so reloading reproduces arrays bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Tuple

import numpy as np

MAGIC = b"TSCPNT01"
FORMAT_VERSION = 1

_ALLOWED_DTYPES = {"float32", "float64", "int64", "int32", "uint8", "bool"}


class ContainerError(RuntimeError):
    """Raised for malformed or unreadable container files."""


def save_container(
    path: str | Path,
    metadata: Dict[str, Any],
    tensors: Dict[str, np.ndarray],
) -> None:
    """Write metadata and named arrays to ``path``."""
    entries = []
    buffers = []
    offset = 0
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr)
        dtype = str(arr.dtype)
        if dtype not in _ALLOWED_DTYPES:
            raise ContainerError(f"unsupported dtype {dtype!r} for tensor {name!r}")
        raw = arr.tobytes()
        entries.append(
            {
                "name": name,
                "dtype": dtype,
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        buffers.append(raw)
        offset += len(raw)
    header = json.dumps(
        {"format_version": FORMAT_VERSION, "metadata": metadata, "tensors": entries}
    ).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(header).to_bytes(8, "little"))
        fh.write(header)
        for raw in buffers:
            fh.write(raw)


def load_container(path: str | Path) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    """Read a container; returns (metadata, {name: array})."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise ContainerError(f"cannot read container {path}: {exc}") from exc
    if len(blob) < 16 or blob[:8] != MAGIC:
        raise ContainerError(f"{path} is not a tensor container (bad magic)")
    header_len = int.from_bytes(blob[8:16], "little")
    if 16 + header_len > len(blob):
        raise ContainerError(f"{path}: truncated header")
    try:
        header = json.loads(blob[16 : 16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerError(f"{path}: corrupt header: {exc}") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise ContainerError(
            f"{path}: unsupported format_version {header.get('format_version')!r}"
        )
    payload = blob[16 + header_len :]
    tensors: Dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        raw = payload[start : start + nbytes]
        if len(raw) != nbytes:
            raise ContainerError(f"{path}: truncated payload for {entry['name']!r}")
        arr = np.frombuffer(raw, dtype=np.dtype(entry["dtype"]))
        tensors[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return header["metadata"], tensors
