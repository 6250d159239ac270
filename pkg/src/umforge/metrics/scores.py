"""Scalar evaluation scores: Dice, utility, KL of HU histograms, and the
compressed-size variety proxy of the average image."""

from __future__ import annotations

import io
import warnings
from typing import NamedTuple

import numpy as np
import PIL
from PIL import Image

from ..errors import DimensionMismatchError, MetricFlagWarning, ParameterError
from ..image import GrayImage, SegMask, ValueSpace
from .wilcoxon import wilcoxon_signed_rank

# Default HU histogram layout (display window of the usual lung setting).
DEFAULT_HU_RANGE = (-1500.0, 100.0)
DEFAULT_HU_BIN_WIDTH = 10.0

# Identity of the lossless codec behind avg_image_compressed_size. Sizes are
# comparable only within one codec identity.
AVERAGE_IMAGE_CODEC = f"png:compress_level=9:pillow-{PIL.__version__}"

_SMOOTH_EPS = 1e-8


def dice(a: SegMask, b: SegMask, label: int) -> float:
    """Dice overlap 2|A∩B| / (|A|+|B|) for one class label.

    When the label is absent from both masks the overlap is vacuous; 1.0 is
    returned and a MetricFlagWarning is raised.
    """
    if a.labels.shape != b.labels.shape:
        raise DimensionMismatchError("masks differ in shape")
    in_a = a.labels == label
    in_b = b.labels == label
    denom = int(np.count_nonzero(in_a)) + int(np.count_nonzero(in_b))
    if denom == 0:
        warnings.warn(
            f"label {label} absent from both masks; Dice reported as 1.0",
            MetricFlagWarning,
            stacklevel=2,
        )
        return 1.0
    return 2.0 * np.count_nonzero(in_a & in_b) / denom


class UtilityScore(NamedTuple):
    mean_delta: float
    p_value: float


def utility_score(dice_augmented, dice_baseline) -> UtilityScore:
    """Mean paired Dice improvement plus signed-rank significance.

    Identical lists make the test degenerate: reported as p=1 with a
    MetricFlagWarning rather than an error.
    """
    aug = np.asarray(dice_augmented, dtype=np.float64)
    base = np.asarray(dice_baseline, dtype=np.float64)
    if aug.shape != base.shape or aug.ndim != 1:
        raise DimensionMismatchError("paired Dice lists must have equal length")
    if aug.size == 0:
        raise ParameterError("paired Dice lists are empty")
    diffs = aug - base
    mean_delta = float(diffs.mean())
    if np.all(diffs == 0):
        warnings.warn(
            "all paired differences are zero; signed-rank test is degenerate (p=1)",
            MetricFlagWarning,
            stacklevel=2,
        )
        return UtilityScore(mean_delta, 1.0)
    result = wilcoxon_signed_rank(aug, base)
    return UtilityScore(mean_delta, result.p_value)


def kl_hu_histogram(
    real_values,
    synth_values,
    bin_width: float = DEFAULT_HU_BIN_WIDTH,
    value_range: tuple[float, float] = DEFAULT_HU_RANGE,
) -> float:
    """KL(P_real || Q_synth) in nats over fixed HU bins.

    Values are clamped into [lo, hi]; each histogram receives 1e-8 mass per
    bin and is renormalized, so the result is finite for empty bins.
    """
    real = np.asarray(real_values, dtype=np.float64).ravel()
    synth = np.asarray(synth_values, dtype=np.float64).ravel()
    if real.size == 0 or synth.size == 0:
        raise ParameterError("both value lists must be non-empty")
    if bin_width <= 0:
        raise ParameterError("bin_width must be positive")
    lo, hi = value_range
    if lo >= hi:
        raise ParameterError("value range must satisfy lo < hi")
    nbins = int(np.ceil((hi - lo) / bin_width))

    def smoothed(values):
        idx = np.floor((np.clip(values, lo, hi) - lo) / bin_width).astype(np.int64)
        idx = np.clip(idx, 0, nbins - 1)
        p = np.bincount(idx, minlength=nbins).astype(np.float64) / values.size
        p = p + _SMOOTH_EPS
        return p / p.sum()

    p = smoothed(real)
    q = smoothed(synth)
    return float(np.sum(p * np.log(p / q)))


class AverageImageSize(NamedTuple):
    avg_image: GrayImage
    num_bytes: int


def _encode_png(img: GrayImage) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(img.pixels).save(buf, format="PNG", compress_level=9, optimize=False)
    return buf.getvalue()


def avg_image_compressed_size(images) -> AverageImageSize:
    """Pixel-wise average image and its losslessly compressed size in bytes.

    A blurrier average (more varied inputs) compresses smaller, so the byte
    count is an ordinal variety proxy within AVERAGE_IMAGE_CODEC.
    """
    images = list(images)
    if not images:
        raise ParameterError("need at least one image")
    shape = images[0].pixels.shape
    for img in images:
        if img.value_space is not ValueSpace.UNIT8:
            raise ParameterError("average-image proxy expects Unit8 images")
        if img.pixels.shape != shape:
            raise DimensionMismatchError("images differ in shape")
    acc = np.zeros(shape, dtype=np.float64)
    for img in images:
        acc += img.pixels
    avg = np.floor(acc / len(images) + 0.5).astype(np.uint8)
    avg_img = GrayImage(avg, ValueSpace.UNIT8, images[0].spacing_mm)
    return AverageImageSize(avg_img, len(_encode_png(avg_img)))
