"""Geometric chest phantoms: images with exact segmentation ground truth.

Each phantom is a body ellipse containing two dark lung ellipses and a
variable number of bright lesion blobs inside the lungs. Per-image
attributes (body aspect category, lesion-count group) stand in for the
demographic labels used to train the task-specific feature extractors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fileio import save_png

BACKGROUND, LUNG, LESION = 0, 1, 2

# Intensity bands sit inside distinct t=50 quantization bins, except that
# dense lesions share a bin with bright bodies: telling those apart needs
# spatial context, which keeps the segmentation task non-trivial.
LUNG_INTENSITY = 60  # bin 50
BODY_INTENSITY_RANGE = (180, 212)  # bins 150 or 200
GGO_INTENSITY = 128  # bin 100, unique
DENSE_INTENSITY = 232  # bin 200, collides with bright bodies


@dataclass(frozen=True)
class PhantomSample:
    image: np.ndarray  # uint8, (size, size)
    seg: np.ndarray  # uint8 labels, (size, size)
    aspect_group: int  # 0 wide body, 1 tall body ("sex" stand-in)
    lesion_group: int  # lesion-count bucket 0..3 ("age" stand-in)


def _ellipse(yy, xx, cy, cx, ry, rx):
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def make_phantom(rng: np.random.Generator, size: int = 128) -> PhantomSample:
    yy, xx = np.mgrid[:size, :size].astype(np.float64)
    cy = cx = size / 2
    wide = int(rng.integers(0, 2))
    if wide == 0:
        body_ry, body_rx = 0.33 * size, 0.43 * size
    else:
        body_ry, body_rx = 0.43 * size, 0.33 * size
    body_ry *= float(rng.uniform(0.92, 1.08))
    body_rx *= float(rng.uniform(0.92, 1.08))
    body = _ellipse(yy, xx, cy, cx, body_ry, body_rx)

    lung_ry = 0.55 * body_ry
    lung_rx = 0.30 * body_rx
    offset = 0.42 * body_rx
    lungs = _ellipse(yy, xx, cy, cx - offset, lung_ry, lung_rx) | _ellipse(
        yy, xx, cy, cx + offset, lung_ry, lung_rx
    )
    lungs &= body

    n_lesions = int(rng.integers(0, 4))
    lesions = np.zeros((size, size), dtype=bool)
    lung_idx = np.flatnonzero(lungs)
    for _ in range(n_lesions):
        if lung_idx.size == 0:
            break
        pick = lung_idx[int(rng.integers(0, lung_idx.size))]
        ly, lx = divmod(pick, size)
        r = float(rng.uniform(0.02 * size, 0.06 * size))
        lesions |= _ellipse(yy, xx, ly, lx, r, r)
    lesions &= lungs

    image = np.zeros((size, size), dtype=np.float64)
    image[body] = float(rng.uniform(*BODY_INTENSITY_RANGE))
    image[lungs] = LUNG_INTENSITY + float(rng.uniform(-6, 6))
    if lesions.any():
        lesion_value = GGO_INTENSITY if rng.random() < 0.5 else DENSE_INTENSITY
        image[lesions] = lesion_value + float(rng.uniform(-5, 5))
    image += rng.normal(0.0, 2.0, size=(size, size))
    image = np.clip(np.rint(image), 0, 255).astype(np.uint8)

    seg = np.zeros((size, size), dtype=np.uint8)
    seg[lungs] = LUNG
    seg[lesions] = LESION
    return PhantomSample(image=image, seg=seg, aspect_group=wide, lesion_group=n_lesions)


def build_corpus(out_dir, count: int, seed: int = 0, size: int = 128) -> Path:
    """Write a phantom corpus: images/, segs/, and an attributes manifest."""
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "segs").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    attributes = {}
    for i in range(count):
        sample = make_phantom(rng, size=size)
        name = f"phantom{i:04d}"
        save_png(out_dir / "images" / f"{name}.png", sample.image)
        save_png(out_dir / "segs" / f"{name}.png", sample.seg)
        attributes[name] = {
            "aspect_group": sample.aspect_group,
            "lesion_group": sample.lesion_group,
        }
    (out_dir / "attributes.json").write_text(
        json.dumps(attributes, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return out_dir
