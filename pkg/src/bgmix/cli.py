"""Command-line front end: curate, augment, evaluate, overlay.

Every run writes a resolved-config echo (run_config.json) next to its
outputs; rerunning from that echo reproduces the run exactly. Flags may
also come from a JSON --config file, with the command line winning.

Exit codes: 0 success, 1 validation or runtime failure, 2 bad arguments.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .core import ValidationError
from .curation import (
    DEFAULT_BG_CATEGORIES,
    DEFAULT_BG_THRESHOLD,
    FrameRef,
    curate_backgrounds,
)
from .dataset_io import (
    decode_image,
    encode_image,
    load_detections,
    load_manifest,
    write_json,
    write_pool,
)
from .evaluation import (
    ALL_POINT,
    DEFAULT_CONF_THRESH,
    DEFAULT_IOU_THRESH,
    VOC11,
    EvalConfig,
    evaluate,
    format_table,
)
from .overlay import render_overlay
from .pipeline import RunSpec, list_images, run_augment

log = logging.getLogger(__name__)

MODE_FLAGS = {
    "bg-mixup": "background_mixup",
    "mixup": "mixup",
    "mixup-external": "mixup_external",
}
INTERPOLATION_FLAGS = {"all-point": ALL_POINT, "voc11": VOC11}


def frame_refs_from_dir(directory: str | Path) -> list[FrameRef]:
    """Stable frame identities for a directory of images.

    All-numeric file stems are used as ids directly; otherwise frames get
    1-based ids in sorted-name order.
    """
    paths = [Path(p) for p in list_images(directory)]
    stems = [p.stem for p in paths]
    if all(s.lstrip("0").isdigit() or s.strip("0") == "" for s in stems) and stems:
        ids = [int(s) for s in stems]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"{directory}: numeric frame stems are not unique")
    else:
        ids = list(range(1, len(paths) + 1))
    return [FrameRef(i, str(p)) for i, p in zip(ids, paths)]


def _parse_categories(raw: str) -> tuple[int, ...]:
    try:
        ids = tuple(int(tok) for tok in raw.split(",") if tok.strip() != "")
    except ValueError:
        raise ValidationError(f"--categories must be comma-separated ints, got {raw!r}")
    if not ids:
        raise ValidationError("--categories must list at least one category id")
    return ids


# execution-only knobs: outputs are invariant to them, so they stay out of
# the echo and equal runs produce byte-identical output trees
_UNECHOED = ("handler", "parser", "config", "workers", "log_level", "out")


def _echo_config(ns: argparse.Namespace, command: str) -> None:
    resolved = {
        k: v
        for k, v in vars(ns).items()
        if k not in _UNECHOED and not k.startswith("_")
    }
    resolved["command"] = command
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(resolved, out / "run_config.json")


def _lambda_histogram(lambdas: list[float], bins: int = 10) -> str:
    counts = [0] * bins
    for lam in lambdas:
        counts[min(int(lam * bins), bins - 1)] += 1
    cells = [f"[{i / bins:.1f},{(i + 1) / bins:.1f}): {c}" for i, c in enumerate(counts)]
    return "lambda histogram  " + "  ".join(cells)


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_curate(ns: argparse.Namespace) -> int:
    frames = frame_refs_from_dir(ns.frames)
    if ns.every_nth > 1:
        frames = frames[:: ns.every_nth]
    detections = load_detections(ns.detections)
    categories = _parse_categories(ns.categories)
    pool = curate_backgrounds(
        frames,
        detections.records,
        threshold=ns.bg_threshold,
        categories=categories,
        source=ns.source or str(ns.frames),
    )

    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    pool_path = out / "pool.json"
    write_pool(pool, pool_path)
    _echo_config(ns, "curate")

    print(f"frames in:   {len(frames)}")
    print(f"frames kept: {len(pool)}")
    rejects = "  ".join(
        f"category {c}: {n}" for c, n in sorted(pool.rejections_by_category.items())
    )
    print(f"rejected by  {rejects}")
    if pool.ignored_detections:
        print(f"ignored detections (unknown frames): {pool.ignored_detections}")
    print(f"pool written to {pool_path}")
    if pool.empty_warning:
        print("warning: background pool is empty", file=sys.stderr)
    return 0


def cmd_augment(ns: argparse.Namespace) -> int:
    mode = MODE_FLAGS[ns.mode]
    spec = RunSpec(
        manifest_path=str(ns.manifest),
        images_dir=str(ns.images),
        out_dir=str(ns.out),
        mode=mode,
        alpha=ns.alpha,
        beta=ns.beta,
        lambda_override=ns.lambda_override,
        master_seed=ns.seed,
        pool_path=str(ns.pool) if ns.pool else None,
        external_dir=str(ns.external) if ns.external else None,
        multiplicity=ns.multiplicity,
        image_format=ns.format,
    )
    if mode == "background_mixup" and not ns.pool:
        ns.parser.error("--pool is required for --mode bg-mixup")
    if mode == "mixup_external" and not ns.external:
        ns.parser.error("--external is required for --mode mixup-external")

    summary = run_augment(spec, workers=ns.workers)
    _echo_config(ns, "augment")
    print(f"augmented {summary.n_outputs} image(s) -> {summary.out_dir}")
    print(f"manifest:   {summary.manifest_path}")
    print(f"provenance: {summary.provenance_path}")
    print(_lambda_histogram(summary.lambdas))
    return 0


def cmd_evaluate(ns: argparse.Namespace) -> int:
    gt = load_manifest(ns.manifest)
    preds = load_detections(ns.detections)
    config = EvalConfig(
        iou_thresh=ns.iou_thresh,
        conf_thresh=ns.conf_thresh,
        interpolation=INTERPOLATION_FLAGS[ns.interpolation],
    )
    report = evaluate(preds, gt, config)

    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(report.to_dict(), out / "eval_report.json")
    table = format_table(report)
    (out / "eval_table.txt").write_text(table, encoding="utf-8")
    _echo_config(ns, "evaluate")
    print(table, end="")
    return 0


def cmd_overlay(ns: argparse.Namespace) -> int:
    if not ns.manifest and not ns.detections:
        ns.parser.error("overlay needs --manifest and/or --detections")

    manifest = load_manifest(ns.manifest) if ns.manifest else None
    preds_by_image: dict[int, list] = {}
    if ns.detections:
        for rec in load_detections(ns.detections).records:
            if rec.score >= ns.conf_thresh:
                preds_by_image.setdefault(rec.image_id, []).append(rec.bbox)

    images_dir = Path(ns.images)
    if manifest is not None:
        targets = [(e.id, images_dir / e.file_name) for e in manifest.images]
    else:
        targets = [(f.id, Path(f.path)) for f in frame_refs_from_dir(images_dir)]

    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    for image_id, path in targets:
        img = decode_image(path)
        gt_boxes = (
            [a.bbox for a in manifest.annotations_for(image_id)] if manifest else []
        )
        rendered = render_overlay(img, gt_boxes, preds_by_image.get(image_id, []))
        suffix = path.suffix.lower().lstrip(".")
        encode_image(rendered, out / path.name, "jpeg" if suffix in ("jpg", "jpeg") else "png")
        count += 1
    _echo_config(ns, "overlay")
    print(f"wrote {count} overlay image(s) to {out}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="bgmix",
        description="Background-mixup dataset augmentation and detector evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands: dict[str, argparse.ArgumentParser] = {}

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", default=None, help="JSON file supplying any flag")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument(
            "--log-level",
            default="info",
            choices=["debug", "info", "warning", "error"],
        )

    p = sub.add_parser("curate", help="build a background pool from detector output")
    common(p)
    p.add_argument("--frames", required=True, help="directory of candidate frames")
    p.add_argument("--detections", required=True, help="detector results JSON")
    p.add_argument("--bg-threshold", type=float, default=DEFAULT_BG_THRESHOLD)
    p.add_argument(
        "--categories",
        default=",".join(str(c) for c in DEFAULT_BG_CATEGORIES),
        help="comma-separated category ids that disqualify a frame",
    )
    p.add_argument("--every-nth", type=int, default=1, help="temporal subsampling stride")
    p.add_argument("--source", default="", help="source description for provenance")
    p.set_defaults(handler=cmd_curate)
    commands["curate"] = p

    p = sub.add_parser("augment", help="write an augmented copy of a dataset")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--images", required=True, help="directory of training images")
    p.add_argument("--mode", required=True, choices=sorted(MODE_FLAGS))
    p.add_argument("--pool", default=None, help="background pool manifest (bg-mixup)")
    p.add_argument("--external", default=None, help="external image dir (mixup-external)")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--lambda", dest="lambda_override", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--multiplicity", type=int, default=1, help="outputs per input image")
    p.add_argument("--format", default="png", choices=["png", "jpeg"])
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(handler=cmd_augment)
    commands["augment"] = p

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    common(p)
    p.add_argument("--detections", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--iou-thresh", type=float, default=DEFAULT_IOU_THRESH)
    p.add_argument("--conf-thresh", type=float, default=DEFAULT_CONF_THRESH)
    p.add_argument(
        "--interpolation", default="all-point", choices=sorted(INTERPOLATION_FLAGS)
    )
    p.set_defaults(handler=cmd_evaluate)
    commands["evaluate"] = p

    p = sub.add_parser("overlay", help="draw boxes for qualitative inspection")
    common(p)
    p.add_argument("--images", required=True)
    p.add_argument("--detections", default=None)
    p.add_argument("--manifest", default=None)
    p.add_argument("--conf-thresh", type=float, default=DEFAULT_CONF_THRESH)
    p.set_defaults(handler=cmd_overlay)
    commands["overlay"] = p

    for name, cp in commands.items():
        cp.set_defaults(parser=cp)
    return parser, commands


def _apply_config_file(commands: dict[str, argparse.ArgumentParser], argv: list[str]) -> None:
    """Install --config values as subparser defaults; CLI flags override."""
    if not argv or argv[0] not in commands or "--config" not in argv:
        return
    sub = commands[argv[0]]
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return  # argparse reports the missing value
    path = Path(argv[idx + 1])
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        sub.error(f"--config: file not found: {path}")
    except json.JSONDecodeError as e:
        sub.error(f"--config: {path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        sub.error(f"--config: {path} must hold a JSON object")

    dests = {a.dest for a in sub._actions}
    mapped = {}
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest == "lambda":
            dest = "lambda_override"
        if dest in ("config", "command", "handler", "parser"):
            continue
        if dest not in dests:
            sub.error(f"--config: unknown option {key!r} for command {argv[0]!r}")
        mapped[dest] = value
    if mapped:
        sub.set_defaults(**mapped)
        # required flags satisfied by the file must not be demanded again
        for action in sub._actions:
            if action.dest in mapped:
                action.required = False


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser, commands = build_parser()
    _apply_config_file(commands, argv)
    ns = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, ns.log_level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return ns.handler(ns)
    except (ValidationError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
