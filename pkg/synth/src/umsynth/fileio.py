"""File formats shared with the mask/evaluation toolchain.

This package talks to that toolchain only through files: 8-bit grayscale
PNGs (+ JSON sidecars for masks), and the UMFT feature format (magic "UMFT",
u16 version=1, u32 N, u32 D, little-endian float32 payload, row-major, with
a JSON sidecar). The implementations here follow the documented schemas and
are validated against the other side by the handshake tests.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

_UMFT_HEADER = struct.Struct("<4sHII")


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def save_png(path, array: np.ndarray) -> Path:
    path = Path(path)
    arr = np.asarray(array)
    if arr.dtype != np.uint8:
        raise ValueError("8-bit PNG expects uint8 data")
    Image.fromarray(arr).save(path, format="PNG")
    return path


def load_png(path) -> np.ndarray:
    with Image.open(Path(path)) as im:
        if im.mode != "L":
            raise ValueError(f"{path}: expected 8-bit grayscale, got mode {im.mode}")
        return np.asarray(im, dtype=np.uint8)


def save_mask_png(path, values: np.ndarray, m: int, t: int) -> Path:
    """Unsupervised-mask PNG plus its {M, t} sidecar."""
    path = save_png(path, values)
    sidecar_path(path).write_text(
        json.dumps({"M": int(m), "t": int(t)}, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    return path


def load_mask_png(path) -> tuple[np.ndarray, int, int]:
    values = load_png(path)
    meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
    return values, int(meta["M"]), int(meta["t"])


def write_umft(path, matrix: np.ndarray, scale: int, task_id: str, dataset_id: str,
               extractor_fingerprint: str) -> Path:
    path = Path(path)
    mat = np.ascontiguousarray(matrix, dtype="<f4")
    if mat.ndim != 2:
        raise ValueError("feature matrix must be 2-D")
    n, d = mat.shape
    with open(path, "wb") as fh:
        fh.write(_UMFT_HEADER.pack(b"UMFT", 1, n, d))
        fh.write(mat.tobytes())
    meta = {
        "scale": int(scale),
        "task_id": task_id,
        "dataset_id": dataset_id,
        "extractor_fingerprint": extractor_fingerprint,
    }
    sidecar_path(path).write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return path


def read_umft(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    raw = path.read_bytes()
    magic, version, n, d = _UMFT_HEADER.unpack_from(raw)
    if magic != b"UMFT" or version != 1:
        raise ValueError(f"{path}: not a version-1 UMFT file")
    if len(raw) != _UMFT_HEADER.size + 4 * n * d:
        raise ValueError(f"{path}: truncated payload")
    matrix = np.frombuffer(raw, dtype="<f4", offset=_UMFT_HEADER.size).reshape(n, d)
    meta = json.loads(sidecar_path(path).read_text(encoding="utf-8"))
    return matrix.copy(), meta
