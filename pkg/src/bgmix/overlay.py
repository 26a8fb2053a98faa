"""Box overlays for qualitative inspection.

Draws one-pixel perimeters so an overlaid image differs from its input
only along box outlines. Boxes reaching past the image edge are clipped.
"""

from __future__ import annotations

import math

import numpy as np

from .core import BoundBox, validate_image

GT_COLOR = (0, 255, 0)
PRED_COLOR = (255, 0, 0)


def draw_box(img: np.ndarray, box: BoundBox, color: tuple[int, int, int]) -> None:
    """Draw a clipped 1px perimeter in place."""
    h, w = img.shape[0], img.shape[1]
    x0 = int(math.floor(box.x))
    y0 = int(math.floor(box.y))
    x1 = int(math.ceil(box.x + box.w)) - 1
    y1 = int(math.ceil(box.y + box.h)) - 1
    if x1 < 0 or y1 < 0 or x0 >= w or y0 >= h:
        return
    cx0, cy0 = max(x0, 0), max(y0, 0)
    cx1, cy1 = min(x1, w - 1), min(y1, h - 1)
    if 0 <= y0:
        img[y0, cx0 : cx1 + 1] = color
    if y1 < h:
        img[y1, cx0 : cx1 + 1] = color
    if 0 <= x0:
        img[cy0 : cy1 + 1, x0] = color
    if x1 < w:
        img[cy0 : cy1 + 1, x1] = color


def render_overlay(
    img: np.ndarray,
    gt_boxes: list[BoundBox] = (),
    pred_boxes: list[BoundBox] = (),
) -> np.ndarray:
    """Return a copy with ground truth in green and predictions in red."""
    out = validate_image(img).copy()
    for box in gt_boxes:
        draw_box(out, box, GT_COLOR)
    for box in pred_boxes:
        draw_box(out, box, PRED_COLOR)
    return out
