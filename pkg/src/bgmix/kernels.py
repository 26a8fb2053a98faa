"""Kernel backend selection.

Prefers the compiled extension, falls back to the numpy implementation.
Both produce byte-identical output. Set BGMIX_KERNEL=numpy or
BGMIX_KERNEL=compiled to force a backend (the latter raises if the
extension is missing).
"""

from __future__ import annotations

import os

from . import _kernels_np

try:
    from . import _kernels as _ext
except ImportError:  # extension not built on this install
    _ext = None


def available_backends() -> dict[str, object]:
    backends: dict[str, object] = {"numpy": _kernels_np}
    if _ext is not None:
        backends["compiled"] = _ext
    return backends


def _select():
    forced = os.environ.get("BGMIX_KERNEL", "auto").lower()
    if forced == "numpy":
        return "numpy", _kernels_np
    if forced == "compiled":
        if _ext is None:
            raise ImportError(
                "BGMIX_KERNEL=compiled but the bgmix._kernels extension is not built"
            )
        return "compiled", _ext
    if forced != "auto":
        raise ValueError(f"unknown BGMIX_KERNEL value: {forced!r}")
    if _ext is not None:
        return "compiled", _ext
    return "numpy", _kernels_np


BACKEND, _active = _select()

blend_u8 = _active.blend_u8
resize_bilinear_u8 = _active.resize_bilinear_u8
