"""PNG + JSON-sidecar serialization for rasters and series manifests.

Unit8 images are plain 8-bit grayscale PNGs. HU rasters are 16-bit PNGs with
an affine sidecar {"slope", "intercept"} mapping stored values back to HU.
Superpixel labelings are 16-bit PNGs of label ids with {count,
iterations_run}; unsupervised masks are 8-bit PNGs with {M, t}.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ParameterError, ValidationError
from .image import CtSeries, GrayImage, SegMask, ValueSpace
from .superpixels import SuperpixelLabeling
from .umask import UnsupervisedMask


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def _write_sidecar(path, payload: dict) -> None:
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _read_sidecar(path) -> dict:
    side = sidecar_path(path)
    if not side.exists():
        raise ValidationError(f"missing sidecar {side}")
    return json.loads(side.read_text(encoding="utf-8"))


def _save_png(path, arr: np.ndarray) -> None:
    Image.fromarray(arr).save(Path(path), format="PNG")


def _load_png(path) -> np.ndarray:
    with Image.open(Path(path)) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.uint8)
        if im.mode in ("I", "I;16"):
            return np.asarray(im, dtype=np.uint16)
        raise ValidationError(f"{path}: unsupported PNG mode {im.mode}")


def save_gray(path, img: GrayImage) -> Path:
    """Write a GrayImage; HU rasters get a 16-bit encoding plus affine sidecar."""
    path = Path(path)
    if img.value_space is ValueSpace.UNIT8:
        _save_png(path, img.pixels)
        return path
    hu = img.pixels
    lo = float(hu.min())
    hi = float(hu.max())
    integral = bool(np.all(hu == np.rint(hu)))
    if integral and hi - lo <= 65535:
        slope, intercept = 1.0, lo
    else:
        slope = (hi - lo) / 65535.0 if hi > lo else 1.0
        intercept = lo
    stored = np.rint((hu - intercept) / slope)
    stored = np.clip(stored, 0, 65535).astype(np.uint16)
    _save_png(path, stored)
    meta = {"slope": slope, "intercept": intercept, "value_space": "HU"}
    if img.spacing_mm is not None:
        meta["spacing_mm"] = list(img.spacing_mm)
    _write_sidecar(path, meta)
    return path


def load_gray(path) -> GrayImage:
    """Read a GrayImage; 16-bit PNGs require the affine HU sidecar."""
    path = Path(path)
    arr = _load_png(path)
    if arr.dtype == np.uint8:
        return GrayImage(arr, ValueSpace.UNIT8)
    meta = _read_sidecar(path)
    hu = arr.astype(np.float64) * float(meta["slope"]) + float(meta["intercept"])
    spacing = meta.get("spacing_mm")
    return GrayImage(hu, ValueSpace.HU, tuple(spacing) if spacing else None)


def save_seg_mask(path, mask: SegMask) -> Path:
    path = Path(path)
    if mask.labels.max() > 255:
        raise ParameterError("segmentation labels above 255 cannot be stored as 8-bit PNG")
    _save_png(path, mask.labels.astype(np.uint8))
    return path


def load_seg_mask(path) -> SegMask:
    arr = _load_png(path)
    return SegMask(arr.astype(np.int64))


def save_labeling(path, labeling: SuperpixelLabeling) -> Path:
    path = Path(path)
    if labeling.count > 65536:
        raise ParameterError("more than 65536 superpixels cannot be stored as 16-bit PNG")
    _save_png(path, labeling.labels.astype(np.uint16))
    _write_sidecar(path, {"count": labeling.count, "iterations_run": labeling.iterations_run})
    return path


def load_labeling(path) -> SuperpixelLabeling:
    arr = _load_png(path)
    meta = _read_sidecar(path)
    return SuperpixelLabeling(
        labels=arr.astype(np.int32),
        count=int(meta["count"]),
        iterations_run=int(meta["iterations_run"]),
    )


def save_umask(path, mask: UnsupervisedMask) -> Path:
    path = Path(path)
    _save_png(path, mask.values)
    _write_sidecar(path, {"M": mask.superpixel_count_m, "t": mask.threshold_t})
    return path


def load_umask(path) -> UnsupervisedMask:
    arr = _load_png(path)
    if arr.dtype != np.uint8:
        raise ValidationError(f"{path}: unsupervised masks must be 8-bit PNGs")
    meta = _read_sidecar(path)
    t = int(meta["t"])
    return UnsupervisedMask(
        values=arr,
        threshold_t=t,
        superpixel_count_m=int(meta["M"]),
        supercluster_values=tuple(int(v) for v in np.unique(arr)),
    )


def load_series_manifest(path, base_dir=None) -> list[CtSeries]:
    """Load a JSON manifest: a list of {patient_id, slice_paths, lung_mask_paths?}.

    Relative paths resolve against base_dir (default: the manifest's folder).
    """
    path = Path(path)
    base = Path(base_dir) if base_dir is not None else path.parent
    entries = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(entries, list):
        raise ValidationError("series manifest must be a JSON list")
    series = []
    for entry in entries:
        slices = tuple(load_gray(base / p) for p in entry["slice_paths"])
        masks = None
        if entry.get("lung_mask_paths"):
            masks = tuple(load_seg_mask(base / p) for p in entry["lung_mask_paths"])
        series.append(
            CtSeries(slices=slices, patient_id=str(entry["patient_id"]), lung_masks=masks)
        )
    return series
