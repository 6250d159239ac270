"""Grayscale raster types, HU windowing, resizing, and CT montage assembly.

Conventions used throughout umforge:
  * rasters are numpy arrays of shape (height, width), row-major;
  * pixel (row, col) sits at integer coordinates (x=col, y=row);
  * Unit8 rasters are uint8, HU rasters are float64;
  * all operations are pure and return new values.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import (
    DimensionMismatchError,
    LungMaskFallbackWarning,
    ParameterError,
    SeriesTooShortError,
    ValidationError,
)
from .rng import derive_stream

# Segmentation class labels.
BACKGROUND = 0
LUNG = 1
LESION = 2

# HU band and body threshold for the mask-free lung-fraction heuristic.
_LUNG_HU_RANGE = (-950.0, -200.0)
_BODY_HU_THRESHOLD = -500.0


class ValueSpace(enum.Enum):
    HU = "HU"
    UNIT8 = "Unit8"


@dataclass(frozen=True)
class GrayImage:
    """A 2-D scalar raster plus provenance metadata.

    pixels holds HU floats (value_space=HU) or normalized 8-bit values
    (value_space=UNIT8, dtype uint8). spacing_mm is (row, col) pixel spacing
    when known.
    """

    pixels: np.ndarray
    value_space: ValueSpace
    spacing_mm: tuple[float, float] | None = None

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.size == 0:
            raise ValidationError("pixels must be a non-empty 2-D array")
        if self.value_space is ValueSpace.UNIT8:
            if px.dtype != np.uint8:
                if not (np.issubdtype(px.dtype, np.integer) and px.min() >= 0 and px.max() <= 255):
                    raise ValidationError("Unit8 pixels must be integers in [0, 255]")
                px = px.astype(np.uint8)
        else:
            px = np.asarray(px, dtype=np.float64)
            if not np.all(np.isfinite(px)):
                raise ValidationError("HU pixels must be finite")
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def same_shape_as(self, other) -> bool:
        return self.pixels.shape == np.asarray(other.pixels).shape


@dataclass(frozen=True)
class SegMask:
    """Per-pixel class labels (BACKGROUND / LUNG / LESION or custom ids)."""

    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2 or lab.size == 0:
            raise ValidationError("labels must be a non-empty 2-D array")
        if not np.issubdtype(lab.dtype, np.integer):
            raise ValidationError("labels must be integers")
        if lab.min() < 0:
            raise ValidationError("labels must be non-negative")
        lab = np.ascontiguousarray(lab)
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True)
class CtSeries:
    """An ordered stack of axial slices (inferior to superior) for one patient."""

    slices: tuple[GrayImage, ...]
    patient_id: str
    lung_masks: tuple[SegMask, ...] | None = None

    def __post_init__(self):
        slices = tuple(self.slices)
        if not slices:
            raise ValidationError("series has no slices")
        shape = slices[0].pixels.shape
        space = slices[0].value_space
        for s in slices:
            if s.pixels.shape != shape or s.value_space is not space:
                raise ValidationError("all slices must share shape and value space")
        masks = self.lung_masks
        if masks is not None:
            masks = tuple(masks)
            if len(masks) != len(slices):
                raise ValidationError("lung_masks must match the number of slices")
            for m in masks:
                if m.labels.shape != shape:
                    raise DimensionMismatchError("lung mask shape differs from slices")
        object.__setattr__(self, "slices", slices)
        object.__setattr__(self, "lung_masks", masks)


@dataclass(frozen=True)
class Montage:
    """A 2x2 tiling of four slices from one series."""

    image: GrayImage
    source_slice_indices: tuple[int, int, int, int]
    seed: int


class ResizeMode(enum.Enum):
    BILINEAR = "bilinear"
    NEAREST = "nearest"


def hu_window(img: GrayImage, lo: float, hi: float) -> GrayImage:
    """Map HU values through a linear window [lo, hi] onto Unit8.

    Output is round(255 * clamp((x - lo) / (hi - lo), 0, 1)) with half-up
    rounding, so lo maps to 0 and hi maps to 255.
    """
    if lo >= hi:
        raise ParameterError(f"window must satisfy lo < hi, got [{lo}, {hi}]")
    if img.value_space is not ValueSpace.HU:
        raise ParameterError("hu_window expects an HU image")
    scaled = np.clip((img.pixels - lo) / (hi - lo), 0.0, 1.0) * 255.0
    out = np.floor(scaled + 0.5).astype(np.uint8)
    return GrayImage(out, ValueSpace.UNIT8, img.spacing_mm)


def _resize_axes(n_in: int, n_out: int) -> np.ndarray:
    # Pixel-center mapping: out index i samples input coordinate
    # (i + 0.5) * n_in / n_out - 0.5.
    return (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5


def _resize_bilinear(arr: np.ndarray, w: int, h: int) -> np.ndarray:
    src_x = _resize_axes(arr.shape[1], w)
    src_y = _resize_axes(arr.shape[0], h)
    x0 = np.clip(np.floor(src_x).astype(np.int64), 0, arr.shape[1] - 1)
    y0 = np.clip(np.floor(src_y).astype(np.int64), 0, arr.shape[0] - 1)
    x1 = np.minimum(x0 + 1, arr.shape[1] - 1)
    y1 = np.minimum(y0 + 1, arr.shape[0] - 1)
    fx = np.clip(src_x - x0, 0.0, 1.0)
    fy = np.clip(src_y - y0, 0.0, 1.0)
    a = arr.astype(np.float64)
    top = a[y0[:, None], x0[None, :]] * (1 - fx) + a[y0[:, None], x1[None, :]] * fx
    bot = a[y1[:, None], x0[None, :]] * (1 - fx) + a[y1[:, None], x1[None, :]] * fx
    return top * (1 - fy[:, None]) + bot * fy[:, None]


def _nearest_indices(n_in: int, n_out: int) -> np.ndarray:
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out)
    return np.clip(np.floor(src).astype(np.int64), 0, n_in - 1)


def _scaled_spacing(img: GrayImage, w: int, h: int):
    if img.spacing_mm is None:
        return None
    return (img.spacing_mm[0] * img.height / h, img.spacing_mm[1] * img.width / w)


def resize(img: GrayImage, w: int, h: int, mode: ResizeMode = ResizeMode.BILINEAR) -> GrayImage:
    """Resample an image to (w, h). Bilinear for intensities, nearest for labels."""
    if w < 1 or h < 1:
        raise ParameterError("target dimensions must be >= 1")
    if mode is ResizeMode.NEAREST:
        iy = _nearest_indices(img.height, h)
        ix = _nearest_indices(img.width, w)
        out = img.pixels[iy[:, None], ix[None, :]]
        return GrayImage(out.copy(), img.value_space, _scaled_spacing(img, w, h))
    out = _resize_bilinear(img.pixels, w, h)
    if img.value_space is ValueSpace.UNIT8:
        out = np.floor(out + 0.5)
        out = np.clip(out, 0, 255).astype(np.uint8)
    return GrayImage(out, img.value_space, _scaled_spacing(img, w, h))


def resize_mask(mask: SegMask, w: int, h: int) -> SegMask:
    """Nearest-neighbor resize for label rasters; never invents label values."""
    if w < 1 or h < 1:
        raise ParameterError("target dimensions must be >= 1")
    iy = _nearest_indices(mask.height, h)
    ix = _nearest_indices(mask.width, w)
    return SegMask(mask.labels[iy[:, None], ix[None, :]].copy())


def lung_fraction(slice_img: GrayImage, lung_mask: SegMask | None) -> float:
    """Fraction of pixels labeled as lung.

    Without a mask, falls back to an intensity heuristic on HU input: pixels
    within the lung HU band inside the (hole-filled) largest connected body
    region. The fallback raises LungMaskFallbackWarning so callers can flag it.
    """
    if lung_mask is not None:
        if lung_mask.labels.shape != slice_img.pixels.shape:
            raise DimensionMismatchError("lung mask shape differs from slice")
        return float(np.count_nonzero(lung_mask.labels == LUNG)) / slice_img.pixels.size
    if slice_img.value_space is not ValueSpace.HU:
        raise ParameterError("mask-free lung fraction requires an HU slice")
    warnings.warn(
        "estimating lung fraction from intensities (no lung mask supplied)",
        LungMaskFallbackWarning,
        stacklevel=2,
    )
    hu = slice_img.pixels
    body = hu > _BODY_HU_THRESHOLD
    if not body.any():
        return 0.0
    comp, ncomp = ndimage.label(body)
    if ncomp > 1:
        sizes = np.bincount(comp.ravel())
        sizes[0] = 0
        body = comp == int(np.argmax(sizes))
    body = ndimage.binary_fill_holes(body)
    lung_like = (hu >= _LUNG_HU_RANGE[0]) & (hu <= _LUNG_HU_RANGE[1]) & body
    return float(np.count_nonzero(lung_like)) / hu.size


def _quartile_bounds(n: int) -> list[tuple[int, int]]:
    # Contiguous split into 4 ranges, sizes differing by at most 1,
    # remainder assigned to the earlier quartiles.
    base, rem = divmod(n, 4)
    bounds = []
    start = 0
    for q in range(4):
        size = base + (1 if q < rem else 0)
        bounds.append((start, start + size))
        start += size
    return bounds


def build_montage(series: CtSeries, seed: int, min_lung_fraction: float = 0.10) -> Montage:
    """Tile one slice per axial quartile into a 2x2 montage.

    Slices whose lung fraction is below `min_lung_fraction` are discarded.
    The remaining slices are split into 4 contiguous quartiles (inferior to
    superior) and one slice is drawn per quartile from a stream derived from
    (seed, patient_id); the top-left quadrant holds the most inferior pick.
    """
    masks = series.lung_masks
    eligible = []
    for i, s in enumerate(series.slices):
        frac = lung_fraction(s, masks[i] if masks is not None else None)
        if frac >= min_lung_fraction:
            eligible.append(i)
    if len(eligible) < 4:
        raise SeriesTooShortError(
            f"only {len(eligible)} slices have lung fraction >= {min_lung_fraction}; need 4"
        )
    stream = derive_stream(seed, "montage", series.patient_id)
    picks = []
    for lo, hi in _quartile_bounds(len(eligible)):
        picks.append(eligible[lo + stream.below(hi - lo)])
    q = [series.slices[i].pixels for i in picks]
    image = np.block([[q[0], q[1]], [q[2], q[3]]])
    spacing = series.slices[0].spacing_mm
    return Montage(
        image=GrayImage(image, series.slices[0].value_space, spacing),
        source_slice_indices=tuple(picks),
        seed=seed,
    )


def montage_quadrants(montage: Montage) -> tuple[GrayImage, ...]:
    """Disassemble a montage into its 4 source tiles (bit-exact)."""
    px = montage.image.pixels
    h2, w2 = px.shape[0] // 2, px.shape[1] // 2
    space = montage.image.value_space
    return tuple(
        GrayImage(px[r * h2 : (r + 1) * h2, c * w2 : (c + 1) * w2].copy(), space)
        for r in (0, 1)
        for c in (0, 1)
    )
