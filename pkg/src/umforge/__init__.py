"""umforge: unsupervised-mask generation, CT montage preprocessing, mask
editing, and multi-scale multi-task synthesis evaluation."""

__version__ = "0.1.0"

from .config import PipelineConfig
from .editing import Ellipse, PatchSpec, Polygon, StampFromMask, insert_patch, intensity_sweep
from .errors import (
    DimensionMismatchError,
    IncompleteGridError,
    InsufficientDataError,
    InsufficientSamplesError,
    LungMaskFallbackWarning,
    MaskEditWarning,
    MetricFlagWarning,
    NumericalError,
    ParameterError,
    SeriesTooShortError,
    UmforgeError,
    UmforgeWarning,
    ValidationError,
)
from .image import (
    BACKGROUND,
    LESION,
    LUNG,
    CtSeries,
    GrayImage,
    Montage,
    ResizeMode,
    SegMask,
    ValueSpace,
    build_montage,
    hu_window,
    lung_fraction,
    montage_quadrants,
    resize,
    resize_mask,
)
from .metrics import (
    SCALES,
    TASKS,
    EvalGrid,
    FeatureSet,
    GaussianSummary,
    avg_image_compressed_size,
    dice,
    frechet_distance,
    gaussian_summary,
    kl_hu_histogram,
    mm_fid,
    mm_std,
    normalize_grids,
    sqrtm_psd,
    utility_score,
    wilcoxon_signed_rank,
)
from .superpixels import (
    SuperpixelLabeling,
    boundary_recall,
    slic,
    under_segmentation_error,
)
from .umask import (
    UnsupervisedMask,
    assign_mean_intensity,
    generate_unsupervised_mask,
    quantize_superclusters,
    validate_mask,
)

__all__ = [
    "__version__",
    "PipelineConfig",
    "Ellipse",
    "PatchSpec",
    "Polygon",
    "StampFromMask",
    "insert_patch",
    "intensity_sweep",
    "DimensionMismatchError",
    "IncompleteGridError",
    "InsufficientDataError",
    "InsufficientSamplesError",
    "LungMaskFallbackWarning",
    "MaskEditWarning",
    "MetricFlagWarning",
    "NumericalError",
    "ParameterError",
    "SeriesTooShortError",
    "UmforgeError",
    "UmforgeWarning",
    "ValidationError",
    "BACKGROUND",
    "LESION",
    "LUNG",
    "CtSeries",
    "GrayImage",
    "Montage",
    "ResizeMode",
    "SegMask",
    "ValueSpace",
    "build_montage",
    "hu_window",
    "lung_fraction",
    "montage_quadrants",
    "resize",
    "resize_mask",
    "SCALES",
    "TASKS",
    "EvalGrid",
    "FeatureSet",
    "GaussianSummary",
    "avg_image_compressed_size",
    "dice",
    "frechet_distance",
    "gaussian_summary",
    "kl_hu_histogram",
    "mm_fid",
    "mm_std",
    "normalize_grids",
    "sqrtm_psd",
    "utility_score",
    "wilcoxon_signed_rank",
    "SuperpixelLabeling",
    "boundary_recall",
    "slic",
    "under_segmentation_error",
    "UnsupervisedMask",
    "assign_mean_intensity",
    "generate_unsupervised_mask",
    "quantize_superclusters",
    "validate_mask",
]
