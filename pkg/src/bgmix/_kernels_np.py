"""Numpy fallback for the per-pixel kernels.

The compiled extension (bgmix._kernels) implements the same operations.
Both paths must produce byte-identical output: all intermediate math is
float64, quantization is round-half-up (floor(x + 0.5)), and expression
grouping mirrors the C loops exactly. The extension is built with
-ffp-contract=off so neither side fuses multiply-adds.
"""

from __future__ import annotations

import numpy as np


def blend_u8(train: np.ndarray, bg: np.ndarray, lam: float) -> np.ndarray:
    """Per-sample weighted blend: round-half-up of lam*train + (1-lam)*bg."""
    t = train.astype(np.float64)
    b = bg.astype(np.float64)
    inv = 1.0 - lam
    out = np.floor(lam * t + inv * b + 0.5)
    return out.astype(np.uint8)


def axis_coords(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bilinear source coordinates for one axis, half-pixel-center convention.

    Maps output sample centers into the source grid, clamped to its edges.
    Returns (lower index, upper index, fractional weight) per output sample.
    """
    scale = n_in / n_out
    s = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    s = np.clip(s, 0.0, float(n_in - 1))
    i0 = np.floor(s).astype(np.intp)
    frac = s - i0
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, frac


def resize_bilinear_u8(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample to (out_h, out_w); identity size is a pass-through copy."""
    in_h, in_w = src.shape[0], src.shape[1]
    if out_h == in_h and out_w == in_w:
        return src.copy()
    y0, y1, fy = axis_coords(in_h, out_h)
    x0, x1, fx = axis_coords(in_w, out_w)

    s = src.astype(np.float64)
    v00 = s[y0[:, None], x0[None, :], :]
    v01 = s[y0[:, None], x1[None, :], :]
    v10 = s[y1[:, None], x0[None, :], :]
    v11 = s[y1[:, None], x1[None, :], :]

    wx = fx[None, :, None]
    wy = fy[:, None, None]
    top = (1.0 - wx) * v00 + wx * v01
    bot = (1.0 - wx) * v10 + wx * v11
    val = (1.0 - wy) * top + wy * bot
    return np.floor(val + 0.5).astype(np.uint8)
