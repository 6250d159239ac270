"""Latent -> mask -> (image, segmentation) inference."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .data import to_tensor
from .fileio import save_mask_png, save_png
from .train import MaskGanState, TrainState


@dataclass(frozen=True)
class SynthTriple:
    image: np.ndarray  # uint8
    seg: np.ndarray  # uint8 labels
    mask: np.ndarray  # uint8 supercluster values


def sample_masks(state: MaskGanState, n: int, seed: int) -> list[np.ndarray]:
    """Draw n masks; values are snapped onto the vocabulary (multiples of t)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    g1 = state.g1
    g1.eval()
    gen = torch.Generator().manual_seed(seed)
    vocab = np.asarray(state.vocab, dtype=np.uint8)
    out = []
    with torch.no_grad():
        for start in range(0, n, 16):
            batch = min(16, n - start)
            z = torch.randn(batch, g1.latent_dim, generator=gen)
            idx = g1(z).argmax(dim=1).numpy()
            for b in range(batch):
                values = vocab[idx[b]]
                if np.any(values % state.threshold_t != 0):
                    raise AssertionError("sampled mask violates the multiples-of-t rule")
                out.append(values)
    g1.train()
    return out


def infer_v2um2i(g1_state: MaskGanState, g2_state: TrainState, n: int,
                 seed: int) -> list[SynthTriple]:
    """n synthetic (image, seg, mask) triples; bit-stable for a fixed seed."""
    masks = sample_masks(g1_state, n, seed)
    g2 = g2_state.g2
    g2.eval()
    triples = []
    with torch.no_grad():
        for mask in masks:
            image_t, seg_logits = g2(to_tensor(mask).unsqueeze(0))
            image = np.clip(np.rint(image_t[0, 0].numpy() * 255.0), 0, 255).astype(np.uint8)
            seg = seg_logits.argmax(dim=1)[0].numpy().astype(np.uint8)
            triples.append(SynthTriple(image=image, seg=seg, mask=mask))
    g2.train()
    return triples


def write_triples(out_dir, triples, superpixel_count_m: int, threshold_t: int) -> list[Path]:
    """Write triples in the shared file layout (masks/, images/, segs/)."""
    out_dir = Path(out_dir)
    written = []
    for sub in ("masks", "images", "segs"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)
    for i, tri in enumerate(triples):
        name = f"synth{i:04d}"
        written.append(
            save_mask_png(out_dir / "masks" / f"{name}_umask.png", tri.mask,
                          m=superpixel_count_m, t=threshold_t)
        )
        written.append(save_png(out_dir / "images" / f"{name}.png", tri.image))
        written.append(save_png(out_dir / "segs" / f"{name}.png", tri.seg))
    return written
