"""Background-mixup dataset augmentation and detection evaluation.

Blends labeled hand-manipulation training images with curated
foreground-free backgrounds (plus classic two-image and external-image
mixing baselines), and scores detector output with AP/mAP and
precision-at-threshold.
"""

from .core import (
    Annotation,
    BoundBox,
    Category,
    DatasetManifest,
    DetectionRecord,
    ImageEntry,
    ValidationError,
    box_area,
    iou,
)
from .curation import BackgroundPool, FrameRef, PoolEntry, curate_backgrounds, sample_background
from .evaluation import (
    EvalConfig,
    EvalReport,
    average_precision,
    evaluate,
    match_predictions,
    precision_at_threshold,
)
from .mixing import (
    AugmentedSample,
    MixConfig,
    TrainingSample,
    background_mixup,
    blend_images,
    mixup_external,
    mixup_pair,
    resize_to_match,
    sample_lambda,
)
from .pipeline import RunSpec, run_augment

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "AugmentedSample",
    "BackgroundPool",
    "BoundBox",
    "Category",
    "DatasetManifest",
    "DetectionRecord",
    "EvalConfig",
    "EvalReport",
    "FrameRef",
    "ImageEntry",
    "MixConfig",
    "PoolEntry",
    "RunSpec",
    "TrainingSample",
    "ValidationError",
    "average_precision",
    "background_mixup",
    "blend_images",
    "box_area",
    "curate_backgrounds",
    "evaluate",
    "iou",
    "match_predictions",
    "mixup_external",
    "mixup_pair",
    "precision_at_threshold",
    "resize_to_match",
    "run_augment",
    "sample_background",
    "sample_lambda",
    "__version__",
]
