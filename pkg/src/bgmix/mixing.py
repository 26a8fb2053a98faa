"""Image mixing operations.

Three modes produce one augmented sample from one training sample:

* background mixup: blend with a curated foreground-free background;
  annotations pass through untouched.
* mixup: blend with a second labeled image from the same dataset; the
  output carries the union of both label sets (partner boxes rescaled).
* external mixup: blend with an arbitrary unlabeled image; only the
  training sample's labels survive.

Blending is out = round_half_up(lam * train + (1 - lam) * partner) per
8-bit sample, computed in float64. lam is drawn once per output image
from Beta(alpha, beta).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .core import Annotation, ValidationError, clamp_box, scale_box, validate_image
from .curation import BackgroundPool, sample_background
from .dataset_io import DecodeError, decode_image

log = logging.getLogger(__name__)

MODE_BACKGROUND = "background_mixup"
MODE_MIXUP = "mixup"
MODE_EXTERNAL = "mixup_external"
MODES = (MODE_BACKGROUND, MODE_MIXUP, MODE_EXTERNAL)

DECODE_RETRIES = 3


@dataclass(frozen=True)
class MixConfig:
    """Mixing hyperparameters and seed policy.

    alpha/beta shape the Beta distribution lam is drawn from;
    lambda_override pins lam to a fixed value instead.
    """

    alpha: float = 1.0
    beta: float = 1.0
    mode: str = MODE_BACKGROUND
    master_seed: int = 0
    lambda_override: float | None = None

    def __post_init__(self):
        if not self.alpha > 0 or not self.beta > 0:
            raise ValidationError(
                f"alpha and beta must be > 0, got alpha={self.alpha}, beta={self.beta}"
            )
        if self.mode not in MODES:
            raise ValidationError(f"unknown mix mode: {self.mode!r}")
        if self.master_seed < 0:
            raise ValidationError(f"master_seed must be >= 0, got {self.master_seed}")
        if self.lambda_override is not None and not 0.0 <= self.lambda_override <= 1.0:
            raise ValidationError(
                f"lambda_override must be in [0, 1], got {self.lambda_override}"
            )


@dataclass(frozen=True)
class Provenance:
    mode: str
    lam: float
    source_id: int
    partner: str | int | None


@dataclass
class TrainingSample:
    image_id: int
    image: np.ndarray
    annotations: list[Annotation]


@dataclass
class AugmentedSample:
    image: np.ndarray
    annotations: list[Annotation]
    provenance: Provenance


def derive_rng(master_seed: int, sample_index: int) -> np.random.Generator:
    """Per-sample stream from a stable hash of (master seed, index).

    Independent streams make the full run reproducible under any worker
    count or scheduling.
    """
    return np.random.default_rng(np.random.SeedSequence([master_seed, sample_index]))


def sample_lambda(cfg: MixConfig, rng: np.random.Generator) -> float:
    if cfg.lambda_override is not None:
        return float(cfg.lambda_override)
    return float(rng.beta(cfg.alpha, cfg.beta))


def blend_images(train: np.ndarray, bg: np.ndarray, lam: float) -> np.ndarray:
    """Blend two equal-size RGB images; lam weights the training image."""
    train = validate_image(train, "train image")
    bg = validate_image(bg, "background image")
    if train.shape != bg.shape:
        raise ValidationError(
            f"blend requires equal dimensions, got {train.shape} vs {bg.shape}"
        )
    if not 0.0 <= lam <= 1.0:
        raise ValidationError(f"lambda must be in [0, 1], got {lam}")
    return kernels.blend_u8(train, bg, float(lam))


def resize_to_match(src: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Bilinear resample to exactly (target_w, target_h); aspect not preserved."""
    src = validate_image(src, "resize source")
    if target_w < 1 or target_h < 1:
        raise ValidationError(f"target size must be >= 1, got {target_w}x{target_h}")
    return kernels.resize_bilinear_u8(src, int(target_h), int(target_w))


def background_mixup(
    sample: TrainingSample,
    pool: BackgroundPool,
    cfg: MixConfig,
    rng: np.random.Generator,
) -> AugmentedSample:
    """Blend a training sample with a pool background; labels pass through.

    Undecodable pool files are skipped and resampled up to DECODE_RETRIES
    times before giving up.
    """
    train = validate_image(sample.image, "train image")
    h, w = train.shape[0], train.shape[1]

    entry = None
    bg = None
    last_error: DecodeError | None = None
    for _ in range(DECODE_RETRIES):
        entry = sample_background(pool, rng)
        try:
            bg = decode_image(entry.path)
            break
        except DecodeError as e:
            last_error = e
            log.warning("skipping undecodable background %s", entry.path)
    if bg is None:
        raise DecodeError(
            f"no decodable background after {DECODE_RETRIES} attempts: {last_error}"
        )

    bg = kernels.resize_bilinear_u8(bg, h, w)
    lam = sample_lambda(cfg, rng)
    blended = blend_images(train, bg, lam)
    return AugmentedSample(
        image=blended,
        annotations=list(sample.annotations),
        provenance=Provenance(MODE_BACKGROUND, lam, sample.image_id, entry.path),
    )


def mixup_pair(
    a: TrainingSample,
    b: TrainingSample,
    cfg: MixConfig,
    rng: np.random.Generator,
) -> AugmentedSample:
    """Blend two labeled samples; output labels are the union of both.

    b is resampled to a's dimensions and its boxes rescaled accordingly.
    The label union ignores lam: every box keeps full weight.
    """
    if a.image_id == b.image_id:
        raise ValidationError(f"mixup requires two distinct images, got id {a.image_id} twice")
    img_a = validate_image(a.image, "first image")
    img_b = validate_image(b.image, "second image")
    h, w = img_a.shape[0], img_a.shape[1]

    ratio_x = w / img_b.shape[1]
    ratio_y = h / img_b.shape[0]
    img_b = kernels.resize_bilinear_u8(img_b, h, w)

    merged = list(a.annotations)
    for ann in b.annotations:
        box = scale_box(ann.bbox, ratio_x, ratio_y)
        box, _ = clamp_box(box, w, h)  # guard float round-off at the far edge
        merged.append(replace(ann, image_id=a.image_id, bbox=box))

    lam = sample_lambda(cfg, rng)
    blended = blend_images(img_a, img_b, lam)
    return AugmentedSample(
        image=blended,
        annotations=merged,
        provenance=Provenance(MODE_MIXUP, lam, a.image_id, b.image_id),
    )


def mixup_external(
    sample: TrainingSample,
    external: np.ndarray,
    cfg: MixConfig,
    rng: np.random.Generator,
    external_ref: str = "",
) -> AugmentedSample:
    """Blend with an unlabeled external image; only training labels survive."""
    train = validate_image(sample.image, "train image")
    external = validate_image(external, "external image")
    h, w = train.shape[0], train.shape[1]
    external = kernels.resize_bilinear_u8(external, h, w)
    lam = sample_lambda(cfg, rng)
    blended = blend_images(train, external, lam)
    return AugmentedSample(
        image=blended,
        annotations=list(sample.annotations),
        provenance=Provenance(MODE_EXTERNAL, lam, sample.image_id, external_ref or None),
    )
