"""Evaluation engine: Gaussian summaries, Fréchet grids, and scalar scores."""

from .gaussian import (
    SCALES,
    TASKS,
    FeatureSet,
    FrechetDetails,
    GaussianSummary,
    frechet_distance,
    gaussian_summary,
    sqrtm_psd,
)
from .grids import EvalGrid, grid_summary, mm_fid, mm_std, mm_std_per_dimension, normalize_grids
from .scores import (
    AVERAGE_IMAGE_CODEC,
    DEFAULT_HU_BIN_WIDTH,
    DEFAULT_HU_RANGE,
    AverageImageSize,
    UtilityScore,
    avg_image_compressed_size,
    dice,
    kl_hu_histogram,
    utility_score,
)
from .wilcoxon import EXACT_LIMIT, WilcoxonResult, wilcoxon_signed_rank

__all__ = [
    "SCALES",
    "TASKS",
    "FeatureSet",
    "FrechetDetails",
    "GaussianSummary",
    "frechet_distance",
    "gaussian_summary",
    "sqrtm_psd",
    "EvalGrid",
    "grid_summary",
    "mm_fid",
    "mm_std",
    "mm_std_per_dimension",
    "normalize_grids",
    "AVERAGE_IMAGE_CODEC",
    "DEFAULT_HU_BIN_WIDTH",
    "DEFAULT_HU_RANGE",
    "AverageImageSize",
    "UtilityScore",
    "avg_image_compressed_size",
    "dice",
    "kl_hu_histogram",
    "utility_score",
    "EXACT_LIMIT",
    "WilcoxonResult",
    "wilcoxon_signed_rank",
]
