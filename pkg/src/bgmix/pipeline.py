"""Dataset-level augmentation runs.

Embarrassingly parallel across output samples: every task derives its own
RNG stream from (master_seed, task index), decodes what it needs, and
writes exactly one image file with a name fixed by the index. Output
bytes therefore depend only on the inputs and the seed, never on worker
count or scheduling. The manifest and provenance sidecar are assembled
in the parent from results sorted by index.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .core import Annotation, BoundBox, DatasetManifest, ImageEntry, ValidationError
from .curation import BackgroundPool
from .dataset_io import (
    decode_image,
    encode_image,
    load_manifest,
    load_pool,
    write_json,
    write_manifest,
)
from .mixing import (
    MODE_BACKGROUND,
    MODE_EXTERNAL,
    MODE_MIXUP,
    MixConfig,
    TrainingSample,
    background_mixup,
    derive_rng,
    mixup_external,
    mixup_pair,
)

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class RunSpec:
    """Everything a worker needs to reproduce any task of a run."""

    manifest_path: str
    images_dir: str
    out_dir: str
    mode: str = MODE_BACKGROUND
    alpha: float = 1.0
    beta: float = 1.0
    lambda_override: float | None = None
    master_seed: int = 0
    pool_path: str | None = None
    external_dir: str | None = None
    multiplicity: int = 1
    image_format: str = "png"

    def mix_config(self) -> MixConfig:
        return MixConfig(
            alpha=self.alpha,
            beta=self.beta,
            mode=self.mode,
            master_seed=self.master_seed,
            lambda_override=self.lambda_override,
        )


@dataclass
class AugmentSummary:
    out_dir: str
    manifest_path: str
    provenance_path: str
    n_outputs: int
    lambdas: list[float] = field(default_factory=list)


@dataclass
class _TaskResult:
    index: int
    file_name: str
    width: int
    height: int
    annotations: list[tuple[int, float, float, float, float]]
    provenance: dict


class _RunContext:
    """Per-process state shared by all tasks of one run."""

    def __init__(self, spec: RunSpec):
        self.spec = spec
        self.cfg = spec.mix_config()
        self.manifest = load_manifest(spec.manifest_path)
        self.anns_by_image: dict[int, list[Annotation]] = {}
        for ann in self.manifest.annotations:
            self.anns_by_image.setdefault(ann.image_id, []).append(ann)
        self.pool: BackgroundPool | None = None
        self.external_files: list[str] = []
        if spec.mode == MODE_BACKGROUND:
            self.pool = load_pool(spec.pool_path)
        elif spec.mode == MODE_EXTERNAL:
            self.external_files = list_images(spec.external_dir)

    def load_sample(self, position: int) -> TrainingSample:
        entry = self.manifest.images[position]
        img = decode_image(Path(self.spec.images_dir) / entry.file_name)
        if img.shape[0] != entry.height or img.shape[1] != entry.width:
            raise ValidationError(
                f"{entry.file_name}: decoded size {img.shape[1]}x{img.shape[0]} "
                f"does not match manifest {entry.width}x{entry.height}"
            )
        return TrainingSample(entry.id, img, self.anns_by_image.get(entry.id, []))


def list_images(directory: str | Path | None) -> list[str]:
    """Sorted image paths under a directory; deterministic listing."""
    if directory is None:
        raise ValidationError("image directory not given")
    d = Path(directory)
    if not d.is_dir():
        raise ValidationError(f"not a directory: {d}")
    files = sorted(
        str(p) for p in d.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file()
    )
    if not files:
        raise ValidationError(f"no images found in {d}")
    return files


def output_name(index: int, image_format: str) -> str:
    ext = "jpg" if image_format.lower() in ("jpeg", "jpg") else "png"
    return f"aug_{index:06d}.{ext}"


_CTX: _RunContext | None = None


def _init_worker(spec: RunSpec) -> None:
    global _CTX
    _CTX = _RunContext(spec)


def _run_task(index: int) -> _TaskResult:
    return _execute_task(_CTX, index)


def _execute_task(ctx: _RunContext, index: int) -> _TaskResult:
    spec = ctx.spec
    n = len(ctx.manifest.images)
    position = index % n
    rng = derive_rng(spec.master_seed, index)
    sample = ctx.load_sample(position)

    if spec.mode == MODE_BACKGROUND:
        out = background_mixup(sample, ctx.pool, ctx.cfg, rng)
    elif spec.mode == MODE_MIXUP:
        j = int(rng.integers(0, n - 1))
        if j >= position:
            j += 1
        partner = ctx.load_sample(j)
        out = mixup_pair(sample, partner, ctx.cfg, rng)
    else:
        k = int(rng.integers(0, len(ctx.external_files)))
        ext_path = ctx.external_files[k]
        ext_img = decode_image(ext_path)
        out = mixup_external(sample, ext_img, ctx.cfg, rng, external_ref=ext_path)

    file_name = output_name(index, spec.image_format)
    encode_image(out.image, Path(spec.out_dir) / "images" / file_name, spec.image_format)

    prov = out.provenance
    return _TaskResult(
        index=index,
        file_name=file_name,
        width=out.image.shape[1],
        height=out.image.shape[0],
        annotations=[
            (a.category_id, a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h)
            for a in out.annotations
        ],
        provenance={
            "index": index,
            "output": file_name,
            "mode": prov.mode,
            "lambda": prov.lam,
            "source_id": prov.source_id,
            "partner": prov.partner,
        },
    )


def run_augment(spec: RunSpec, workers: int | None = None) -> AugmentSummary:
    """Execute a full augmentation run and write its three outputs.

    Produces out_dir/images/, out_dir/manifest.json, and
    out_dir/provenance.json. workers=1 runs the serial reference
    schedule; any other count gives byte-identical results.
    """
    if spec.mode not in (MODE_BACKGROUND, MODE_MIXUP, MODE_EXTERNAL):
        raise ValidationError(f"unknown mix mode: {spec.mode!r}")
    if spec.multiplicity < 1:
        raise ValidationError(f"multiplicity must be >= 1, got {spec.multiplicity}")
    spec.mix_config()  # validate hyperparameters before spawning anything

    ctx = _RunContext(spec)
    n = len(ctx.manifest.images)
    if n == 0:
        raise ValidationError(f"{spec.manifest_path}: manifest lists no images")
    if spec.mode == MODE_BACKGROUND and len(ctx.pool) == 0:
        raise ValidationError("background pool is empty; curate a non-empty pool first")
    if spec.mode == MODE_MIXUP and n < 2:
        raise ValidationError("mixup needs at least two images in the manifest")

    out_dir = Path(spec.out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)

    total = n * spec.multiplicity
    indices = range(total)
    if workers is None:
        workers = os.cpu_count() or 1

    if workers <= 1:
        results = [_execute_task(ctx, i) for i in indices]
    else:
        chunk = max(1, total // (workers * 4))
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_worker, initargs=(spec,)
        ) as pool:
            results = list(pool.map(_run_task, indices, chunksize=chunk))
    results.sort(key=lambda r: r.index)

    images = []
    annotations = []
    next_ann_id = 1
    for r in results:
        new_image_id = r.index + 1
        images.append(ImageEntry(new_image_id, r.file_name, r.width, r.height))
        for category_id, x, y, w, h in r.annotations:
            annotations.append(
                Annotation(next_ann_id, new_image_id, category_id, BoundBox(x, y, w, h))
            )
            next_ann_id += 1

    manifest = DatasetManifest(images, annotations, list(ctx.manifest.categories))
    manifest_path = out_dir / "manifest.json"
    write_manifest(manifest, manifest_path)

    provenance = {
        "mode": spec.mode,
        "alpha": spec.alpha,
        "beta": spec.beta,
        "master_seed": spec.master_seed,
        "lambda_override": spec.lambda_override,
        "multiplicity": spec.multiplicity,
        "per_image": [r.provenance for r in results],
    }
    provenance_path = out_dir / "provenance.json"
    write_json(provenance, provenance_path)

    return AugmentSummary(
        out_dir=str(out_dir),
        manifest_path=str(manifest_path),
        provenance_path=str(provenance_path),
        n_outputs=total,
        lambdas=[r.provenance["lambda"] for r in results],
    )
