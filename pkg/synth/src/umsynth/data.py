"""Corpus loading: (mask, image, segmentation) triples from PNG files.

A corpus directory holds images/ and segs/ from the phantom builder and
masks/ produced by the mask toolchain (`umforge umask gen`); stems pair the
three up (phantom0001.png <-> phantom0001_umask.png).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .fileio import load_mask_png, load_png


@dataclass(frozen=True)
class Triple:
    name: str
    mask: np.ndarray  # uint8 supercluster values
    image: np.ndarray  # uint8
    seg: np.ndarray | None  # uint8 labels or None for unlabeled items
    threshold_t: int


@dataclass(frozen=True)
class Corpus:
    triples: tuple[Triple, ...]
    threshold_t: int
    vocab: tuple[int, ...]  # supercluster values present anywhere in the corpus

    def __len__(self):
        return len(self.triples)


def load_corpus(root, with_segs: bool = True) -> Corpus:
    root = Path(root)
    mask_dir = root / "masks"
    image_dir = root / "images"
    seg_dir = root / "segs"
    triples = []
    thresholds = set()
    values: set[int] = set()
    for mask_path in sorted(mask_dir.glob("*_umask.png")):
        name = mask_path.name.removesuffix("_umask.png")
        mask, _, t = load_mask_png(mask_path)
        thresholds.add(t)
        values.update(int(v) for v in np.unique(mask))
        image = load_png(image_dir / f"{name}.png")
        seg_path = seg_dir / f"{name}.png"
        seg = load_png(seg_path) if (with_segs and seg_path.exists()) else None
        triples.append(Triple(name=name, mask=mask, image=image, seg=seg, threshold_t=t))
    if not triples:
        raise ValueError(f"no mask/image pairs found under {root}")
    if len(thresholds) != 1:
        raise ValueError(f"corpus mixes thresholds {sorted(thresholds)}")
    return Corpus(
        triples=tuple(triples),
        threshold_t=thresholds.pop(),
        vocab=tuple(sorted(values)),
    )


def to_tensor(arr: np.ndarray) -> torch.Tensor:
    """uint8 (H, W) -> float (1, H, W) in [0, 1]."""
    return torch.from_numpy(arr.astype(np.float32) / 255.0).unsqueeze(0)


def batch_tensors(triples, device="cpu"):
    masks = torch.stack([to_tensor(t.mask) for t in triples]).to(device)
    images = torch.stack([to_tensor(t.image) for t in triples]).to(device)
    segs = None
    if all(t.seg is not None for t in triples):
        segs = torch.stack(
            [torch.from_numpy(t.seg.astype(np.int64)) for t in triples]
        ).to(device)
    return masks, images, segs


def epoch_order(n: int, seed: int, epoch: int) -> np.ndarray:
    """Deterministic shuffle for one epoch, independent of global RNG state."""
    return np.random.default_rng((seed, epoch)).permutation(n)
