"""Background-pool curation.

A frame from an external source enters the pool only when the supplied
detector output contains no hand or object-in-contact evidence for it at
or above the confidence threshold: detection files list positives only,
so frames without records are eligible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import CATEGORY_HAND, CATEGORY_OBJECT, DetectionRecord, ValidationError
from .dataset_io import file_digest

log = logging.getLogger(__name__)

DEFAULT_BG_THRESHOLD = 0.1
DEFAULT_BG_CATEGORIES = (CATEGORY_HAND, CATEGORY_OBJECT)


@dataclass(frozen=True)
class FrameRef:
    """One candidate frame in an external image source."""

    id: int
    path: str


@dataclass(frozen=True)
class PoolEntry:
    path: str
    source_id: int
    digest: str = ""


@dataclass
class BackgroundPool:
    """Curated foreground-free frames plus the rule that selected them."""

    entries: list[PoolEntry] = field(default_factory=list)
    threshold: float = DEFAULT_BG_THRESHOLD
    categories: tuple[int, ...] = DEFAULT_BG_CATEGORIES
    source: str = ""
    empty_warning: bool = False
    ignored_detections: int = 0
    rejections_by_category: dict[int, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)


def curate_backgrounds(
    frames: list[FrameRef],
    detections: list[DetectionRecord],
    threshold: float = DEFAULT_BG_THRESHOLD,
    categories: tuple[int, ...] = DEFAULT_BG_CATEGORIES,
    source: str = "",
    compute_digests: bool = True,
) -> BackgroundPool:
    """Select the frames where nothing foreground was detected.

    A detection disqualifies its frame when its category is in
    `categories` and its score is >= `threshold` (boundary counts as
    presence). Detections referencing unknown frame ids are ignored and
    counted. Entries come out sorted by path so reruns are byte-stable.

    Raises ValidationError on empty `frames`; an empty result pool is a
    success with `empty_warning` set.
    """
    if not frames:
        raise ValidationError("curation requires at least one candidate frame")
    if not 0.0 <= threshold <= 1.0:
        raise ValidationError(f"threshold must be in [0, 1], got {threshold}")

    frame_ids = {f.id for f in frames}
    category_set = set(categories)
    disqualified: dict[int, set[int]] = {}
    ignored = 0
    for det in detections:
        if det.image_id not in frame_ids:
            ignored += 1
            continue
        if det.category_id in category_set and det.score >= threshold:
            disqualified.setdefault(det.image_id, set()).add(det.category_id)
    if ignored:
        log.warning("ignored %d detection(s) referencing unknown frames", ignored)

    rejections: dict[int, int] = {c: 0 for c in sorted(category_set)}
    for cats in disqualified.values():
        for c in cats:
            rejections[c] += 1

    entries = [
        PoolEntry(
            path=f.path,
            source_id=f.id,
            digest=file_digest(f.path) if compute_digests else "",
        )
        for f in frames
        if f.id not in disqualified
    ]
    entries.sort(key=lambda e: e.path)

    empty = not entries
    if empty:
        log.warning("curation produced an empty background pool")
    return BackgroundPool(
        entries=entries,
        threshold=threshold,
        categories=tuple(sorted(category_set)),
        source=source,
        empty_warning=empty,
        ignored_detections=ignored,
        rejections_by_category=rejections,
    )


def sample_background(pool: BackgroundPool, rng: np.random.Generator) -> PoolEntry:
    """Uniform draw from the pool; deterministic given the rng state."""
    if not pool.entries:
        raise ValidationError("cannot sample from an empty background pool")
    idx = int(rng.integers(0, len(pool.entries)))
    return pool.entries[idx]
