"""Task-specific feature extractors and UMFT export.

Four extraction tasks mirror the evaluation grid: a fixed random embedding
("imagenet" stand-in) plus small classifiers trained on phantom attributes
(body aspect for "sex", lesion-count group for "age") and on real-vs-synth
discrimination. Features are the 64-d pre-classifier embeddings.
"""

from __future__ import annotations

import hashlib
import io
from pathlib import Path

import numpy as np
import torch
from torch.nn import functional as F

from .data import epoch_order, to_tensor
from .fileio import write_umft
from .models import FeatureExtractor

TASK_IDS = ("imagenet", "sex", "age", "real-vs-synth")
_TASK_CLASSES = {"imagenet": 8, "sex": 2, "age": 4, "real-vs-synth": 2}
DEFAULT_SCALES = (128, 256, 512, 1024)


def make_extractor(task_id: str, seed: int = 0) -> FeatureExtractor:
    if task_id not in TASK_IDS:
        raise ValueError(f"unknown task {task_id!r}; expected one of {TASK_IDS}")
    torch.manual_seed(seed + 100 + TASK_IDS.index(task_id))
    return FeatureExtractor(num_classes=_TASK_CLASSES[task_id])


def train_extractor(task_id: str, images, labels, seed: int = 0, epochs: int = 40,
                    batch_size: int = 16, lr: float = 8e-3) -> FeatureExtractor:
    """Train a small classifier on (image, label) pairs for one task."""
    model = make_extractor(task_id, seed=seed)
    labels = np.asarray(labels, dtype=np.int64)
    if len(images) != labels.size:
        raise ValueError("images and labels must pair up")
    tensors = [to_tensor(img) for img in images]
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    for epoch in range(epochs):
        order = epoch_order(len(tensors), seed + 31, epoch)
        for start in range(0, len(tensors), batch_size):
            idx = order[start : start + batch_size]
            if idx.size < 2:
                continue
            x = torch.stack([tensors[i] for i in idx])
            y = torch.from_numpy(labels[idx])
            loss = F.cross_entropy(model(x), y)
            opt.zero_grad(set_to_none=True)
            loss.backward()
            opt.step()
    model.eval()
    return model


def extractor_fingerprint(model: FeatureExtractor) -> str:
    buf = io.BytesIO()
    torch.save(model.state_dict(), buf)
    return hashlib.sha256(buf.getvalue()).hexdigest()[:16]


def extract_features(model: FeatureExtractor, images, scale: int,
                     allowed_scales=DEFAULT_SCALES) -> np.ndarray:
    """(N, 64) float32 features of images resampled to scale x scale."""
    if scale not in allowed_scales:
        raise ValueError(f"scale {scale} not in configured scales {allowed_scales}")
    model.eval()
    rows = []
    with torch.no_grad():
        for img in images:
            x = to_tensor(img).unsqueeze(0)
            if x.shape[-1] != scale:
                x = F.interpolate(x, size=(scale, scale), mode="bilinear",
                                  align_corners=False)
            rows.append(model.features(x)[0].numpy())
    return np.stack(rows).astype(np.float32)


def export_features(path, model: FeatureExtractor, images, task_id: str, scale: int,
                    dataset_id: str, allowed_scales=DEFAULT_SCALES) -> Path:
    """Extract features and write them in the UMFT interchange format."""
    if task_id not in TASK_IDS:
        raise ValueError(f"unknown task {task_id!r}")
    matrix = extract_features(model, images, scale, allowed_scales)
    return write_umft(
        path,
        matrix,
        scale=scale,
        task_id=task_id,
        dataset_id=dataset_id,
        extractor_fingerprint=extractor_fingerprint(model),
    )


def save_extractor(path, model: FeatureExtractor, task_id: str) -> Path:
    path = Path(path)
    torch.save({"kind": "extractor", "task_id": task_id,
                "state": model.state_dict()}, path)
    return path


def load_extractor(path) -> tuple[FeatureExtractor, str]:
    payload = torch.load(Path(path), weights_only=False)
    if payload.get("kind") != "extractor":
        raise ValueError(f"{path} is not an extractor checkpoint")
    task_id = payload["task_id"]
    model = make_extractor(task_id)
    model.load_state_dict(payload["state"])
    model.eval()
    return model, task_id
