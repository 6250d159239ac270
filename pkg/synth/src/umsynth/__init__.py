"""umsynth: desk-scale mask-conditioned annotated-image synthesis."""

__version__ = "0.1.0"

from .data import Corpus, Triple, load_corpus
from .features import (
    TASK_IDS,
    export_features,
    extract_features,
    extractor_fingerprint,
    make_extractor,
    train_extractor,
)
from .infer import SynthTriple, infer_v2um2i, sample_masks, write_triples
from .models import AnnotatedGenerator, FeatureExtractor, MaskGenerator, PatchDiscriminator
from .phantom import PhantomSample, build_corpus, make_phantom
from .train import (
    LOSS_TERMS,
    MaskGanState,
    NonFiniteLossError,
    TrainConfig,
    TrainState,
    evaluate_segmentation_dice,
    load_checkpoint,
    load_mask_gan,
    save_checkpoint,
    save_mask_gan,
    train_annotated_generator,
    train_mask_generator,
)

__all__ = [
    "__version__",
    "Corpus",
    "Triple",
    "load_corpus",
    "TASK_IDS",
    "export_features",
    "extract_features",
    "extractor_fingerprint",
    "make_extractor",
    "train_extractor",
    "SynthTriple",
    "infer_v2um2i",
    "sample_masks",
    "write_triples",
    "AnnotatedGenerator",
    "FeatureExtractor",
    "MaskGenerator",
    "PatchDiscriminator",
    "PhantomSample",
    "build_corpus",
    "make_phantom",
    "LOSS_TERMS",
    "MaskGanState",
    "NonFiniteLossError",
    "TrainConfig",
    "TrainState",
    "evaluate_segmentation_dice",
    "load_checkpoint",
    "load_mask_gan",
    "save_checkpoint",
    "save_mask_gan",
    "train_annotated_generator",
    "train_mask_generator",
]
