"""Bit-exact feature file format (UMFT).

Layout: magic "UMFT", u16 version (=1), u32 N, u32 D, then N*D little-endian
32-bit floats in row-major order. A JSON sidecar (path + ".json") records
scale, task_id, dataset_id, and the extractor fingerprint.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .metrics.gaussian import FeatureSet

MAGIC = b"UMFT"
VERSION = 1

_HEADER = struct.Struct("<4sHII")


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def write_umft(
    path,
    features: FeatureSet,
    extractor_fingerprint: str = "",
) -> Path:
    """Write a feature set and its sidecar; returns the feature path."""
    path = Path(path)
    matrix = np.ascontiguousarray(features.matrix, dtype="<f4")
    n, d = matrix.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, d))
        fh.write(matrix.tobytes())
    meta = {
        "scale": features.scale,
        "task_id": features.task_id,
        "dataset_id": features.dataset_id,
        "extractor_fingerprint": extractor_fingerprint,
    }
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def read_umft(path) -> tuple[FeatureSet, str]:
    """Read a feature file plus sidecar; returns (features, fingerprint)."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValidationError(f"{path}: truncated UMFT header")
    magic, version, n, d = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValidationError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValidationError(f"{path}: unsupported UMFT version {version}")
    expected = _HEADER.size + 4 * n * d
    if len(raw) != expected:
        raise ValidationError(
            f"{path}: payload is {len(raw) - _HEADER.size} bytes, expected {4 * n * d}"
        )
    matrix = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(n, d)
    side = sidecar_path(path)
    if not side.exists():
        raise ValidationError(f"{path}: missing sidecar {side.name}")
    meta = json.loads(side.read_text(encoding="utf-8"))
    fs = FeatureSet(
        matrix=matrix.astype(np.float64),
        scale=int(meta["scale"]),
        task_id=str(meta["task_id"]),
        dataset_id=str(meta["dataset_id"]),
    )
    return fs, str(meta.get("extractor_fingerprint", ""))


def read_feature_dir(directory) -> list[FeatureSet]:
    """Load every *.umft file in a directory (sorted by name)."""
    directory = Path(directory)
    sets = []
    for path in sorted(directory.glob("*.umft")):
        fs, _ = read_umft(path)
        sets.append(fs)
    return sets
