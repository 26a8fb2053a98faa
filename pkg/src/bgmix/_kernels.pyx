# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled per-pixel kernels: uint8 blend and bilinear resize.

Must stay byte-identical to bgmix._kernels_np: float64 intermediates,
round-half-up quantization, same expression grouping, no FMA contraction
(built with -ffp-contract=off). Axis coordinates are shared with the
fallback so both paths sample identical source positions.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

from ._kernels_np import axis_coords

cnp.import_array()


def blend_u8(const cnp.uint8_t[:, :, ::1] train, const cnp.uint8_t[:, :, ::1] bg, double lam):
    """Per-sample weighted blend: round-half-up of lam*train + (1-lam)*bg."""
    cdef Py_ssize_t h = train.shape[0]
    cdef Py_ssize_t w = train.shape[1]
    cdef Py_ssize_t ch = train.shape[2]
    if bg.shape[0] != h or bg.shape[1] != w or bg.shape[2] != ch:
        raise ValueError("blend_u8: shape mismatch")
    out_arr = np.empty((h, w, ch), dtype=np.uint8)
    cdef cnp.uint8_t[:, :, ::1] out = out_arr
    cdef double inv = 1.0 - lam
    cdef Py_ssize_t y, x, k
    with nogil:
        for y in range(h):
            for x in range(w):
                for k in range(ch):
                    out[y, x, k] = <cnp.uint8_t>floor(
                        lam * <double>train[y, x, k]
                        + inv * <double>bg[y, x, k]
                        + 0.5
                    )
    return out_arr


def resize_bilinear_u8(const cnp.uint8_t[:, :, ::1] src, Py_ssize_t out_h, Py_ssize_t out_w):
    """Bilinear resample to (out_h, out_w); identity size is a pass-through copy."""
    cdef Py_ssize_t in_h = src.shape[0]
    cdef Py_ssize_t in_w = src.shape[1]
    cdef Py_ssize_t ch = src.shape[2]
    if out_h == in_h and out_w == in_w:
        return np.asarray(src).copy()

    y0a, y1a, fya = axis_coords(in_h, out_h)
    x0a, x1a, fxa = axis_coords(in_w, out_w)
    cdef cnp.intp_t[::1] y0 = y0a
    cdef cnp.intp_t[::1] y1 = y1a
    cdef double[::1] fyv = fya
    cdef cnp.intp_t[::1] x0 = x0a
    cdef cnp.intp_t[::1] x1 = x1a
    cdef double[::1] fxv = fxa

    out_arr = np.empty((out_h, out_w, ch), dtype=np.uint8)
    cdef cnp.uint8_t[:, :, ::1] out = out_arr
    cdef Py_ssize_t y, x, k, r0, r1, c0, c1
    cdef double fy, fx, top, bot, val
    with nogil:
        for y in range(out_h):
            fy = fyv[y]
            r0 = y0[y]
            r1 = y1[y]
            for x in range(out_w):
                fx = fxv[x]
                c0 = x0[x]
                c1 = x1[x]
                for k in range(ch):
                    top = (1.0 - fx) * <double>src[r0, c0, k] + fx * <double>src[r0, c1, k]
                    bot = (1.0 - fx) * <double>src[r1, c0, k] + fx * <double>src[r1, c1, k]
                    val = (1.0 - fy) * top + fy * bot
                    out[y, x, k] = <cnp.uint8_t>floor(val + 0.5)
    return out_arr
