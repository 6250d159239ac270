"""Programmatic edits of unsupervised masks.

Edits happen in mask space only: a patch footprint is rasterized and the
covered pixels are replaced by a new supercluster value (or by values stamped
from another mask region). Everything outside the footprint is untouched.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import MaskEditWarning, ParameterError, ValidationError
from .umask import UnsupervisedMask


@dataclass(frozen=True)
class Ellipse:
    """Axis-aligned ellipse; a pixel (x, y) is inside when
    ((x-cx)/rx)^2 + ((y-cy)/ry)^2 <= 1. A zero radius collapses that axis
    to the exact center line."""

    cx: float
    cy: float
    rx: float
    ry: float

    def __post_init__(self):
        if self.rx < 0 or self.ry < 0:
            raise ParameterError("ellipse radii must be non-negative")


@dataclass(frozen=True)
class Polygon:
    """Simple polygon filled with the even-odd rule over pixel coordinates."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        if len(verts) < 3:
            raise ParameterError("polygon needs at least 3 vertices")
        object.__setattr__(self, "vertices", verts)


@dataclass(frozen=True)
class StampFromMask:
    """Copy a rectangular window of another mask onto the target.

    The window (x0, y0, width, height) is read from `source` and written with
    its top-left corner at (dest_x, dest_y); the copied values keep their
    relative layout, so the value multiset of the region is preserved when
    nothing is clipped.
    """

    source: UnsupervisedMask
    x0: int
    y0: int
    width: int
    height: int
    dest_x: int
    dest_y: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ParameterError("stamp window must be at least 1x1")
        if (
            self.x0 < 0
            or self.y0 < 0
            or self.x0 + self.width > self.source.width
            or self.y0 + self.height > self.source.height
        ):
            raise ParameterError("stamp window exceeds the source mask bounds")


Shape = Ellipse | Polygon | StampFromMask


@dataclass(frozen=True)
class PatchSpec:
    """A shape plus the supercluster value to paint it with.

    `intensity` must be a multiple of the target mask's threshold; it is
    ignored for StampFromMask shapes (the stamped values carry their own).
    Only replace blending exists: patches overwrite, they do not mix.
    """

    shape: Shape
    intensity: int | None = None
    blend: str = "replace"

    def __post_init__(self):
        if self.blend != "replace":
            raise ParameterError("only replace blending is supported")
        if not isinstance(self.shape, StampFromMask) and self.intensity is None:
            raise ParameterError("intensity is required for ellipse/polygon patches")


def _ellipse_footprint(e: Ellipse, width: int, height: int) -> np.ndarray:
    xs = np.arange(width, dtype=np.float64)
    ys = np.arange(height, dtype=np.float64)
    if e.rx > 0:
        tx = ((xs - e.cx) / e.rx) ** 2
    else:
        tx = np.where(xs == e.cx, 0.0, np.inf)
    if e.ry > 0:
        ty = ((ys - e.cy) / e.ry) ** 2
    else:
        ty = np.where(ys == e.cy, 0.0, np.inf)
    return (ty[:, None] + tx[None, :]) <= 1.0


def _polygon_footprint(p: Polygon, width: int, height: int) -> np.ndarray:
    # Even-odd scanline fill at integer pixel coordinates with half-open
    # edges ([ymin, ymax) vertically, [xa, xb) horizontally), so shared
    # edges never double-fill.
    out = np.zeros((height, width), dtype=bool)
    verts = p.vertices
    edges = [(verts[i], verts[(i + 1) % len(verts)]) for i in range(len(verts))]
    ys_all = [v[1] for v in verts]
    y_lo = max(0, int(np.ceil(min(ys_all))))
    y_hi = min(height - 1, int(np.floor(max(ys_all))))
    for y in range(y_lo, y_hi + 1):
        crossings = []
        for (x0, y0), (x1, y1) in edges:
            if y0 == y1:
                continue
            if y0 > y1:
                x0, y0, x1, y1 = x1, y1, x0, y0
            if y0 <= y < y1:
                crossings.append(x0 + (y - y0) * (x1 - x0) / (y1 - y0))
        crossings.sort()
        for xa, xb in zip(crossings[0::2], crossings[1::2]):
            lo = max(0, int(np.ceil(xa)))
            hi = min(width - 1, int(np.ceil(xb)) - 1)
            if lo <= hi:
                out[y, lo : hi + 1] = True
    return out


def rasterize_footprint(shape: Shape, width: int, height: int) -> np.ndarray:
    """Boolean footprint of a shape, clipped to the image bounds."""
    if isinstance(shape, Ellipse):
        return _ellipse_footprint(shape, width, height)
    if isinstance(shape, Polygon):
        return _polygon_footprint(shape, width, height)
    if isinstance(shape, StampFromMask):
        out = np.zeros((height, width), dtype=bool)
        x_lo = max(0, shape.dest_x)
        y_lo = max(0, shape.dest_y)
        x_hi = min(width, shape.dest_x + shape.width)
        y_hi = min(height, shape.dest_y + shape.height)
        if x_lo < x_hi and y_lo < y_hi:
            out[y_lo:y_hi, x_lo:x_hi] = True
        return out
    raise ParameterError(f"unknown shape {type(shape).__name__}")


def insert_patch(mask: UnsupervisedMask, patch: PatchSpec) -> UnsupervisedMask:
    """Paint one patch onto a mask; pixels outside the footprint are bit-identical."""
    t = mask.threshold_t
    values = mask.values.copy()
    if isinstance(patch.shape, StampFromMask):
        stamp = patch.shape
        if stamp.source.threshold_t != t:
            raise ValidationError(
                f"stamp source uses t={stamp.source.threshold_t}, target uses t={t}"
            )
        window = stamp.source.values[
            stamp.y0 : stamp.y0 + stamp.height, stamp.x0 : stamp.x0 + stamp.width
        ]
        x_lo = max(0, stamp.dest_x)
        y_lo = max(0, stamp.dest_y)
        x_hi = min(mask.width, stamp.dest_x + stamp.width)
        y_hi = min(mask.height, stamp.dest_y + stamp.height)
        if x_lo >= x_hi or y_lo >= y_hi:
            warnings.warn("patch footprint is empty after clipping", MaskEditWarning, stacklevel=2)
        else:
            values[y_lo:y_hi, x_lo:x_hi] = window[
                y_lo - stamp.dest_y : y_hi - stamp.dest_y,
                x_lo - stamp.dest_x : x_hi - stamp.dest_x,
            ]
    else:
        intensity = int(patch.intensity)
        if not 0 <= intensity <= 255:
            raise ValidationError(f"patch intensity {intensity} outside [0, 255]")
        if intensity % t != 0:
            raise ValidationError(f"patch intensity {intensity} is not a multiple of t={t}")
        footprint = rasterize_footprint(patch.shape, mask.width, mask.height)
        if not footprint.any():
            warnings.warn("patch footprint is empty after clipping", MaskEditWarning, stacklevel=2)
        values[footprint] = intensity
    return UnsupervisedMask(
        values=values,
        threshold_t=t,
        superpixel_count_m=mask.superpixel_count_m,
        supercluster_values=tuple(int(v) for v in np.unique(values)),
    )


def intensity_sweep(
    mask: UnsupervisedMask, patch: PatchSpec, values: list[int]
) -> list[UnsupervisedMask]:
    """One edited mask per value; the masks differ only inside the footprint."""
    t = mask.threshold_t
    for v in values:
        if int(v) % t != 0:
            raise ValidationError(f"sweep value {v} is not a multiple of t={t}")
    out = []
    for v in values:
        out.append(
            insert_patch(
                mask,
                PatchSpec(shape=patch.shape, intensity=int(v), blend=patch.blend),
            )
        )
    return out
