"""Manifest, detection, and pool-manifest files plus image codecs.

All JSON written here is canonical (sorted keys, sorted record order,
two-space indent, trailing newline) so logically equal objects are
byte-identical on disk. Loaders reject semantic violations instead of
repairing them, with one documented exception: annotation boxes that
partially overflow their image are clamped and counted.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .core import (
    Annotation,
    BoundBox,
    Category,
    DatasetManifest,
    DetectionRecord,
    ImageEntry,
    ValidationError,
    clamp_box,
)

log = logging.getLogger(__name__)


class DecodeError(ValidationError):
    """Image file missing, truncated, or not a supported raster format."""


@dataclass
class DetectionSet:
    """Validated detector predictions loaded from one results file."""

    records: list[DetectionRecord] = field(default_factory=list)
    source: str = ""

    def for_category(self, category_id: int) -> list[DetectionRecord]:
        return [r for r in self.records if r.category_id == category_id]


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(obj, path: str | Path) -> None:
    Path(path).write_text(canonical_dumps(obj), encoding="utf-8")


def _read_json(path: str | Path):
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"file not found: {p}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError(f"{p}: not valid JSON: {e}") from e


def _require(obj: dict, key: str, context: str):
    if key not in obj:
        raise ValidationError(f"{context}: missing key {key!r}")
    return obj[key]


def _parse_bbox(raw, context: str) -> BoundBox:
    if not isinstance(raw, (list, tuple)) or len(raw) != 4:
        raise ValidationError(f"{context}: bbox must be [x, y, w, h], got {raw!r}")
    try:
        x, y, w, h = (float(v) for v in raw)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{context}: bbox has non-numeric entries: {raw!r}") from e
    try:
        return BoundBox(x, y, w, h)
    except ValidationError as e:
        raise ValidationError(f"{context}: {e}") from e


# ---------------------------------------------------------------------------
# dataset manifests


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and validate a COCO-style manifest.

    Boxes partially outside their image are clamped (counted in
    `clamp_warnings`); boxes fully outside, dangling image ids, and
    duplicate ids are errors.
    """
    data = _read_json(path)
    ctx = str(path)
    if not isinstance(data, dict):
        raise ValidationError(f"{ctx}: manifest must be a JSON object")

    images: list[ImageEntry] = []
    seen_ids: set[int] = set()
    for raw in _require(data, "images", ctx):
        entry = ImageEntry(
            id=int(_require(raw, "id", f"{ctx}: image")),
            file_name=str(_require(raw, "file_name", f"{ctx}: image")),
            width=int(_require(raw, "width", f"{ctx}: image")),
            height=int(_require(raw, "height", f"{ctx}: image")),
        )
        if entry.id in seen_ids:
            raise ValidationError(f"{ctx}: duplicate image id {entry.id}")
        seen_ids.add(entry.id)
        images.append(entry)
    dims = {e.id: (e.width, e.height) for e in images}

    categories: list[Category] = []
    cat_ids: set[int] = set()
    for raw in _require(data, "categories", ctx):
        cat = Category(
            id=int(_require(raw, "id", f"{ctx}: category")),
            name=str(_require(raw, "name", f"{ctx}: category")),
        )
        if cat.id in cat_ids:
            raise ValidationError(f"{ctx}: duplicate category id {cat.id}")
        cat_ids.add(cat.id)
        categories.append(cat)

    annotations: list[Annotation] = []
    clamped = 0
    for raw in _require(data, "annotations", ctx):
        ann_id = int(_require(raw, "id", f"{ctx}: annotation"))
        actx = f"{ctx}: annotation {ann_id}"
        image_id = int(_require(raw, "image_id", actx))
        if image_id not in dims:
            raise ValidationError(f"{actx}: unknown image id {image_id}")
        category_id = int(_require(raw, "category_id", actx))
        if category_id not in cat_ids:
            raise ValidationError(f"{actx}: unknown category id {category_id}")
        box = _parse_bbox(_require(raw, "bbox", actx), actx)
        w, h = dims[image_id]
        box, changed = clamp_box(box, w, h)
        if changed:
            clamped += 1
        annotations.append(Annotation(ann_id, image_id, category_id, box))

    if clamped:
        log.warning("%s: clamped %d annotation box(es) to image bounds", ctx, clamped)
    return DatasetManifest(images, annotations, categories, clamp_warnings=clamped)


def manifest_to_dict(m: DatasetManifest) -> dict:
    return {
        "images": [
            {"id": e.id, "file_name": e.file_name, "width": e.width, "height": e.height}
            for e in sorted(m.images, key=lambda e: e.id)
        ],
        "annotations": [
            {
                "id": a.id,
                "image_id": a.image_id,
                "category_id": a.category_id,
                "bbox": a.bbox.as_list(),
            }
            for a in sorted(m.annotations, key=lambda a: a.id)
        ],
        "categories": [
            {"id": c.id, "name": c.name} for c in sorted(m.categories, key=lambda c: c.id)
        ],
    }


def write_manifest(m: DatasetManifest, path: str | Path) -> None:
    write_json(manifest_to_dict(m), path)


# ---------------------------------------------------------------------------
# detection files


def load_detections(path: str | Path, categories: set[int] | None = None) -> DetectionSet:
    """Load a COCO-results-style prediction array.

    Malformed entries are reported with their array index. When
    `categories` is given, records must use only those category ids.
    """
    data = _read_json(path)
    ctx = str(path)
    if not isinstance(data, list):
        raise ValidationError(f"{ctx}: detections must be a JSON array")
    records: list[DetectionRecord] = []
    for i, raw in enumerate(data):
        ectx = f"{ctx}: entry {i}"
        if not isinstance(raw, dict):
            raise ValidationError(f"{ectx}: must be an object")
        try:
            rec = DetectionRecord(
                image_id=int(_require(raw, "image_id", ectx)),
                category_id=int(_require(raw, "category_id", ectx)),
                bbox=_parse_bbox(_require(raw, "bbox", ectx), ectx),
                score=float(_require(raw, "score", ectx)),
            )
        except ValidationError as e:
            raise ValidationError(f"{ectx}: {e}") from e
        if categories is not None and rec.category_id not in categories:
            raise ValidationError(f"{ectx}: unknown category id {rec.category_id}")
        records.append(rec)
    return DetectionSet(records=records, source=ctx)


def write_detections(records: list[DetectionRecord], path: str | Path) -> None:
    write_json(
        [
            {
                "image_id": r.image_id,
                "category_id": r.category_id,
                "bbox": r.bbox.as_list(),
                "score": float(r.score),
            }
            for r in records
        ],
        path,
    )


# ---------------------------------------------------------------------------
# background-pool manifests


def pool_to_dict(pool) -> dict:
    return {
        "entries": [
            {"path": e.path, "source_id": e.source_id, "digest": e.digest}
            for e in sorted(pool.entries, key=lambda e: e.path)
        ],
        "curation": {
            "threshold": float(pool.threshold),
            "categories": sorted(pool.categories),
            "source": pool.source,
        },
    }


def write_pool(pool, path: str | Path) -> None:
    write_json(pool_to_dict(pool), path)


def load_pool(path: str | Path):
    from .curation import BackgroundPool, PoolEntry

    data = _read_json(path)
    ctx = str(path)
    if not isinstance(data, dict):
        raise ValidationError(f"{ctx}: pool manifest must be a JSON object")
    cur = _require(data, "curation", ctx)
    entries = []
    seen: set[str] = set()
    for i, raw in enumerate(_require(data, "entries", ctx)):
        p = str(_require(raw, "path", f"{ctx}: entry {i}"))
        if p in seen:
            raise ValidationError(f"{ctx}: entry {i}: duplicate path {p!r}")
        seen.add(p)
        entries.append(
            PoolEntry(
                path=p,
                source_id=int(_require(raw, "source_id", f"{ctx}: entry {i}")),
                digest=str(raw.get("digest", "")),
            )
        )
    return BackgroundPool(
        entries=entries,
        threshold=float(_require(cur, "threshold", f"{ctx}: curation")),
        categories=tuple(sorted(int(c) for c in _require(cur, "categories", f"{ctx}: curation"))),
        source=str(cur.get("source", "")),
    )


# ---------------------------------------------------------------------------
# image codecs


def decode_image(path: str | Path) -> np.ndarray:
    """Decode PNG/JPEG to an (H, W, 3) uint8 array.

    Grayscale is promoted to three equal channels; alpha is dropped.
    """
    try:
        with Image.open(path) as im:
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except FileNotFoundError as e:
        raise DecodeError(f"image file not found: {path}") from e
    except (OSError, SyntaxError, ValueError) as e:
        raise DecodeError(f"cannot decode {path}: {e}") from e
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DecodeError(f"{path}: decoded to unexpected shape {arr.shape}")
    # PIL hands out read-only views; downstream wants a writable C buffer
    if not arr.flags.writeable or not arr.flags.c_contiguous:
        arr = arr.copy()
    return arr


def encode_image(img: np.ndarray, path: str | Path, format: str = "png") -> None:
    """Write an (H, W, 3) uint8 array as PNG (lossless) or JPEG."""
    fmt = format.lower()
    if fmt not in ("png", "jpeg", "jpg"):
        raise ValidationError(f"unsupported image format: {format!r}")
    im = Image.fromarray(img, mode="RGB")
    if fmt == "png":
        im.save(path, format="PNG")
    else:
        im.save(path, format="JPEG", quality=95)


def file_digest(path: str | Path) -> str:
    """sha256 hex digest of a file's raw bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
