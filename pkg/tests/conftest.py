"""Shared fixtures: synthetic datasets, pools, and tree digests."""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
import pytest

from bgmix.core import Annotation, BoundBox, Category, DatasetManifest, ImageEntry
from bgmix.dataset_io import encode_image, write_manifest

HAND = 1
OBJ = 2


def make_image(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    return rng.integers(0, 256, (h, w, 3), dtype=np.uint8)


def make_gradient_image(h: int, w: int, phase: int = 0) -> np.ndarray:
    """Smooth deterministic image; compresses fast, unlike noise."""
    y = np.arange(h, dtype=np.uint16)[:, None]
    x = np.arange(w, dtype=np.uint16)[None, :]
    r = (x * 255 // max(w - 1, 1) + phase) % 256
    g = (y * 255 // max(h - 1, 1) + 2 * phase) % 256
    b = ((x + y) * 255 // max(h + w - 2, 1) + 3 * phase) % 256
    return np.stack(
        [np.broadcast_to(r, (h, w)), np.broadcast_to(g, (h, w)), np.broadcast_to(b, (h, w))],
        axis=2,
    ).astype(np.uint8)


def random_box(rng: np.random.Generator, width: int, height: int) -> BoundBox:
    w = float(rng.integers(1, max(2, width // 2)))
    h = float(rng.integers(1, max(2, height // 2)))
    x = float(rng.integers(0, int(width - w) + 1))
    y = float(rng.integers(0, int(height - h) + 1))
    return BoundBox(x, y, w, h)


def build_dataset(
    root: Path,
    n_images: int = 16,
    seed: int = 1234,
    min_size: int = 24,
    max_size: int = 48,
    noise: bool = True,
) -> tuple[Path, Path]:
    """Write a labeled synthetic dataset; returns (manifest path, images dir)."""
    rng = np.random.default_rng(seed)
    images_dir = root / "images"
    images_dir.mkdir(parents=True, exist_ok=True)

    entries: list[ImageEntry] = []
    annotations: list[Annotation] = []
    ann_id = 1
    for i in range(1, n_images + 1):
        w = int(rng.integers(min_size, max_size + 1))
        h = int(rng.integers(min_size, max_size + 1))
        img = make_image(rng, h, w) if noise else make_gradient_image(h, w, phase=i)
        name = f"img_{i:03d}.png"
        encode_image(img, images_dir / name, "png")
        entries.append(ImageEntry(i, name, w, h))
        for _ in range(int(rng.integers(1, 4))):
            cat = HAND if rng.random() < 0.5 else OBJ
            annotations.append(Annotation(ann_id, i, cat, random_box(rng, w, h)))
            ann_id += 1

    manifest = DatasetManifest(
        entries, annotations, [Category(HAND, "hand"), Category(OBJ, "targetobject")]
    )
    manifest_path = root / "manifest.json"
    write_manifest(manifest, manifest_path)
    return manifest_path, images_dir


def build_background_dir(
    root: Path, n: int = 4, seed: int = 99, size: tuple[int, int] = (20, 28)
) -> Path:
    """Write plain background frames with numeric stems."""
    rng = np.random.default_rng(seed)
    bg_dir = root / "backgrounds"
    bg_dir.mkdir(parents=True, exist_ok=True)
    h, w = size
    for i in range(1, n + 1):
        encode_image(make_image(rng, h, w), bg_dir / f"{i:04d}.png", "png")
    return bg_dir


def build_pool_manifest(root: Path, bg_dir: Path) -> Path:
    """Pool manifest that admits every frame in bg_dir."""
    from bgmix.cli import frame_refs_from_dir
    from bgmix.curation import curate_backgrounds
    from bgmix.dataset_io import write_pool

    pool = curate_backgrounds(frame_refs_from_dir(bg_dir), [], threshold=0.1)
    path = root / "pool.json"
    write_pool(pool, path)
    return path


def tree_digest(root: Path) -> str:
    """Order-independent digest of a directory tree's names and bytes."""
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(b"\0")
            h.update(p.read_bytes())
            h.update(b"\1")
    return h.hexdigest()


@pytest.fixture()
def tiny_dataset(tmp_path):
    manifest_path, images_dir = build_dataset(tmp_path, n_images=6, seed=7)
    return tmp_path, manifest_path, images_dir


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    seen: dict[str, str] = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            if status == "passed" and rep.when != "call":
                continue
            name = nodeid.split("::")[-1]
            if status != "passed":
                seen[name] = "FAIL"
            else:
                seen.setdefault(name, "PASS")
    if seen:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name in sorted(seen):
            terminalreporter.write_line(f"{seen[name]}  {name}")
