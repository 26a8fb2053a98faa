"""Shared domain types and box geometry.

Images are plain numpy arrays of shape (height, width, 3), dtype uint8,
row-major. Everything here is an immutable value; the functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CATEGORY_HAND = 1
CATEGORY_OBJECT = 2

DEFAULT_CATEGORY_NAMES = {CATEGORY_HAND: "hand", CATEGORY_OBJECT: "targetobject"}


class ValidationError(ValueError):
    """Input data violates a documented contract."""


@dataclass(frozen=True)
class BoundBox:
    """Axis-aligned box: top-left corner (x, y) plus size (w, h) in pixels.

    Coordinates are continuous; w and h must be strictly positive.
    """

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValidationError(f"box {name} must be finite, got {v!r}")
        if self.w <= 0 or self.h <= 0:
            raise ValidationError(
                f"box size must be positive, got w={self.w}, h={self.h}"
            )

    def as_list(self) -> list[float]:
        return [float(self.x), float(self.y), float(self.w), float(self.h)]


@dataclass(frozen=True)
class Category:
    id: int
    name: str


@dataclass(frozen=True)
class Annotation:
    """A labeled box attached to one image of a manifest."""

    id: int
    image_id: int
    category_id: int
    bbox: BoundBox


@dataclass(frozen=True)
class ImageEntry:
    id: int
    file_name: str
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValidationError(
                f"image {self.id}: dimensions must be >= 1, "
                f"got {self.width}x{self.height}"
            )


@dataclass(frozen=True)
class DetectionRecord:
    """One detector prediction: a scored box on an image."""

    image_id: int
    category_id: int
    bbox: BoundBox
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"score must be in [0, 1], got {self.score}")


@dataclass
class DatasetManifest:
    """A labeled image collection: images, box annotations, categories.

    `clamp_warnings` counts annotations whose boxes were clamped to image
    bounds at load time.
    """

    images: list[ImageEntry] = field(default_factory=list)
    annotations: list[Annotation] = field(default_factory=list)
    categories: list[Category] = field(default_factory=list)
    clamp_warnings: int = 0

    def image_by_id(self, image_id: int) -> ImageEntry:
        for e in self.images:
            if e.id == image_id:
                return e
        raise KeyError(image_id)

    def annotations_for(self, image_id: int) -> list[Annotation]:
        return [a for a in self.annotations if a.image_id == image_id]

    def category_name(self, category_id: int) -> str:
        for c in self.categories:
            if c.id == category_id:
                return c.name
        return str(category_id)


def box_area(b: BoundBox) -> float:
    """Area in square pixels; strictly positive by construction."""
    return b.w * b.h


def iou(a: BoundBox, b: BoundBox) -> float:
    """Intersection-over-union of two boxes, in [0, 1]; 0 when disjoint."""
    ax1 = a.x + a.w
    ay1 = a.y + a.h
    bx1 = b.x + b.w
    by1 = b.y + b.h
    iw = min(ax1, bx1) - max(a.x, b.x)
    ih = min(ay1, by1) - max(a.y, b.y)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    # areas from the same corner differences so iou(b, b) == 1.0 exactly
    union = (ax1 - a.x) * (ay1 - a.y) + (bx1 - b.x) * (by1 - b.y) - inter
    return inter / union


def clamp_box(box: BoundBox, width: float, height: float) -> tuple[BoundBox, bool]:
    """Clamp a box to [0, width] x [0, height].

    Returns the clamped box and whether anything changed. Raises
    ValidationError when the box lies fully outside (zero overlap).
    """
    x0 = max(box.x, 0.0)
    y0 = max(box.y, 0.0)
    x1 = min(box.x + box.w, float(width))
    y1 = min(box.y + box.h, float(height))
    if x1 <= x0 or y1 <= y0:
        raise ValidationError(
            f"box {box.as_list()} lies outside image bounds {width}x{height}"
        )
    changed = (x0, y0, x1 - x0, y1 - y0) != (box.x, box.y, box.w, box.h)
    if not changed:
        return box, False
    return BoundBox(x0, y0, x1 - x0, y1 - y0), True


def scale_box(box: BoundBox, ratio_x: float, ratio_y: float) -> BoundBox:
    return BoundBox(box.x * ratio_x, box.y * ratio_y, box.w * ratio_x, box.h * ratio_y)


def validate_image(img: np.ndarray, name: str = "image") -> np.ndarray:
    """Check the (H, W, 3) uint8 contract and return a C-contiguous view."""
    if not isinstance(img, np.ndarray):
        raise ValidationError(f"{name} must be a numpy array, got {type(img)!r}")
    if img.dtype != np.uint8:
        raise ValidationError(f"{name} must be uint8, got {img.dtype}")
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValidationError(f"{name} must have shape (H, W, 3), got {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValidationError(f"{name} must be at least 1x1, got {img.shape}")
    return np.ascontiguousarray(img)


__all__ = [
    "Annotation",
    "BoundBox",
    "Category",
    "CATEGORY_HAND",
    "CATEGORY_OBJECT",
    "DEFAULT_CATEGORY_NAMES",
    "DatasetManifest",
    "DetectionRecord",
    "ImageEntry",
    "ValidationError",
    "box_area",
    "clamp_box",
    "iou",
    "scale_box",
    "validate_image",
]
