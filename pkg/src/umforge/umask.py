"""Unsupervised mask (supercluster) generation.

A mask is produced in three steps: SLIC superpixels, per-superpixel mean
intensity, then quantization of the means to multiples of a threshold t.
Superclusters are identified by quantized value only, so spatially disjoint
regions may share a supercluster.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, ParameterError, ValidationError
from .image import GrayImage, ValueSpace
from .superpixels import SuperpixelLabeling, slic


@dataclass(frozen=True)
class UnsupervisedMask:
    """Per-pixel quantized intensities: every value is a multiple of threshold_t."""

    values: np.ndarray
    threshold_t: int
    superpixel_count_m: int
    supercluster_values: tuple[int, ...]

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=np.uint8))
        if vals.ndim != 2 or vals.size == 0:
            raise ValidationError("values must be a non-empty 2-D array")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "supercluster_values", tuple(int(v) for v in self.supercluster_values))
        validate_mask(self)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def as_image(self) -> GrayImage:
        return GrayImage(self.values.copy(), ValueSpace.UNIT8)


def validate_mask(mask: UnsupervisedMask) -> None:
    """Check the UnsupervisedMask invariants; raises ValidationError on failure."""
    t = mask.threshold_t
    if not 0 < t < 256:
        raise ValidationError(f"threshold_t must be in (0, 255], got {t}")
    present = np.unique(mask.values)
    if np.any(present % t != 0):
        bad = [int(v) for v in present if v % t != 0]
        raise ValidationError(f"mask values {bad} are not multiples of t={t}")
    if tuple(int(v) for v in present) != mask.supercluster_values:
        raise ValidationError("supercluster_values does not match the values present")
    if len(mask.supercluster_values) > math.ceil(256 / t):
        raise ValidationError("more superclusters than the quantization allows")


def assign_mean_intensity(labeling: SuperpixelLabeling, img: GrayImage) -> GrayImage:
    """Replace every pixel by the (half-up rounded) mean of its superpixel."""
    if img.value_space is not ValueSpace.UNIT8:
        raise ParameterError("assign_mean_intensity expects a Unit8 image")
    if labeling.labels.shape != img.pixels.shape:
        raise DimensionMismatchError("labeling and image differ in shape")
    flat = labeling.labels.ravel()
    sums = np.bincount(flat, weights=img.pixels.ravel().astype(np.float64), minlength=labeling.count)
    counts = np.bincount(flat, minlength=labeling.count)
    means = np.floor(sums / counts + 0.5)
    out = means[labeling.labels].astype(np.uint8)
    return GrayImage(out, ValueSpace.UNIT8, img.spacing_mm)


def quantize_superclusters(meanimg: GrayImage, t: int) -> UnsupervisedMask:
    """Quantize a mean-intensity image to multiples of t: v -> (v // t) * t."""
    if not isinstance(t, (int, np.integer)) or not 0 < t < 256:
        raise ParameterError(f"threshold t must be an integer in (0, 255], got {t!r}")
    if meanimg.value_space is not ValueSpace.UNIT8:
        raise ParameterError("quantize_superclusters expects a Unit8 image")
    vals = (meanimg.pixels.astype(np.int64) // t * t).astype(np.uint8)
    return UnsupervisedMask(
        values=vals,
        threshold_t=int(t),
        superpixel_count_m=0,
        supercluster_values=tuple(int(v) for v in np.unique(vals)),
    )


def generate_unsupervised_mask(
    img: GrayImage,
    m: int,
    t: int,
    compactness: float = 10.0,
    max_iters: int = 10,
) -> UnsupervisedMask:
    """Full pipeline: SLIC -> per-superpixel mean -> quantization.

    Deterministic for fixed inputs; the requested superpixel count m and
    threshold t are recorded on the output.
    """
    labeling = slic(img, m, compactness=compactness, max_iters=max_iters)
    meanimg = assign_mean_intensity(labeling, img)
    mask = quantize_superclusters(meanimg, t)
    return UnsupervisedMask(
        values=mask.values,
        threshold_t=mask.threshold_t,
        superpixel_count_m=int(m),
        supercluster_values=mask.supercluster_values,
    )
