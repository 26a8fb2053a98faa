"""Detector scoring: per-category AP, mAP, and precision at a confidence cutoff.

Matching is greedy in a deterministic prediction order (score descending,
then image id, then box coordinates), so shuffling a prediction file never
changes a reported number. Greedy matching in that order is prefix-stable:
the matches of the top-k predictions do not depend on lower-scored ones,
which makes precision-at-threshold equal to matching only the survivors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Annotation,
    DatasetManifest,
    DetectionRecord,
    ValidationError,
    iou,
)
from .dataset_io import DetectionSet

ALL_POINT = "all_point"
VOC11 = "voc11"

DEFAULT_IOU_THRESH = 0.5
DEFAULT_CONF_THRESH = 0.1


@dataclass(frozen=True)
class MatchedPrediction:
    score: float
    is_true_positive: bool
    matched_gt: int | None  # annotation id


@dataclass
class MatchResult:
    """Per-prediction TP/FP flags in evaluation order, plus the GT total."""

    predictions: list[MatchedPrediction]
    gt_count: int


@dataclass(frozen=True)
class EvalConfig:
    iou_thresh: float = DEFAULT_IOU_THRESH
    conf_thresh: float = DEFAULT_CONF_THRESH
    interpolation: str = ALL_POINT
    categories: tuple[int, ...] | None = None  # default: manifest categories

    def __post_init__(self):
        if not 0.0 < self.iou_thresh <= 1.0:
            raise ValidationError(f"iou_thresh must be in (0, 1], got {self.iou_thresh}")
        if not 0.0 <= self.conf_thresh <= 1.0:
            raise ValidationError(f"conf_thresh must be in [0, 1], got {self.conf_thresh}")
        if self.interpolation not in (ALL_POINT, VOC11):
            raise ValidationError(f"unknown interpolation: {self.interpolation!r}")


@dataclass
class CategoryEval:
    ap: float
    precision: float | None
    tp: int
    fp: int
    gt: int


@dataclass
class EvalReport:
    per_category: dict[str, CategoryEval]
    map: float
    config: dict

    def to_dict(self) -> dict:
        return {
            "per_category": {
                name: {
                    "ap": r.ap,
                    "precision": r.precision,
                    "tp": r.tp,
                    "fp": r.fp,
                    "gt": r.gt,
                }
                for name, r in self.per_category.items()
            },
            "map": self.map,
            "config": self.config,
        }


def sort_predictions(preds: list[DetectionRecord]) -> list[DetectionRecord]:
    """Deterministic evaluation order: score desc, image id asc, box asc."""
    return sorted(
        preds,
        key=lambda r: (-r.score, r.image_id, r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h),
    )


def match_predictions(
    preds: list[DetectionRecord] | DetectionSet,
    gt: DatasetManifest,
    category_id: int,
    iou_thresh: float = DEFAULT_IOU_THRESH,
) -> MatchResult:
    """Greedily match one category's predictions against ground truth.

    Each prediction takes the highest-IoU still-unmatched ground-truth box
    in its image, provided the overlap reaches `iou_thresh`; ground-truth
    boxes match at most once.
    """
    if isinstance(preds, DetectionSet):
        preds = preds.records
    preds = sort_predictions([r for r in preds if r.category_id == category_id])

    gt_by_image: dict[int, list[Annotation]] = {}
    gt_count = 0
    for ann in gt.annotations:
        if ann.category_id == category_id:
            gt_by_image.setdefault(ann.image_id, []).append(ann)
            gt_count += 1

    matched_ids: set[int] = set()
    out: list[MatchedPrediction] = []
    for pred in preds:
        best_iou = 0.0
        best_ann: Annotation | None = None
        for ann in gt_by_image.get(pred.image_id, ()):
            if ann.id in matched_ids:
                continue
            overlap = iou(pred.bbox, ann.bbox)
            if overlap > best_iou:
                best_iou = overlap
                best_ann = ann
        if best_ann is not None and best_iou >= iou_thresh:
            matched_ids.add(best_ann.id)
            out.append(MatchedPrediction(pred.score, True, best_ann.id))
        else:
            out.append(MatchedPrediction(pred.score, False, None))
    return MatchResult(out, gt_count)


def _pr_curve(m: MatchResult) -> tuple[np.ndarray, np.ndarray]:
    flags = np.array([p.is_true_positive for p in m.predictions], dtype=np.float64)
    tp = np.cumsum(flags)
    fp = np.cumsum(1.0 - flags)
    recall = tp / m.gt_count
    precision = tp / (tp + fp)
    return recall, precision


def average_precision(m: MatchResult, interpolation: str = ALL_POINT) -> float:
    """Area under the interpolated precision-recall curve.

    With no ground truth the value is 1.0 when there are also no
    predictions and 0.0 otherwise.
    """
    if m.gt_count == 0:
        return 1.0 if not m.predictions else 0.0
    if not m.predictions:
        return 0.0
    recall, precision = _pr_curve(m)

    if interpolation == VOC11:
        ap = 0.0
        for r in np.linspace(0.0, 1.0, 11):
            covered = precision[recall >= r]
            ap += float(covered.max()) if covered.size else 0.0
        return ap / 11.0

    # all-point: integrate the running-max precision envelope over recall
    mrec = np.concatenate(([0.0], recall))
    mpre = np.concatenate(([0.0], precision))
    for i in range(len(mpre) - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def _precision_from_match(m: MatchResult, conf_thresh: float) -> tuple[float | None, int, int]:
    tp = fp = 0
    for p in m.predictions:
        if p.score >= conf_thresh:
            if p.is_true_positive:
                tp += 1
            else:
                fp += 1
    if tp + fp == 0:
        return None, 0, 0
    return tp / (tp + fp), tp, fp


def precision_at_threshold(
    preds: list[DetectionRecord] | DetectionSet,
    gt: DatasetManifest,
    category_id: int,
    conf_thresh: float = DEFAULT_CONF_THRESH,
    iou_thresh: float = DEFAULT_IOU_THRESH,
) -> float | None:
    """TP / (TP + FP) over predictions scoring >= conf_thresh.

    Returns None (not 0) when no prediction clears the cutoff: the metric
    is undefined there rather than all-false-positive.
    """
    m = match_predictions(preds, gt, category_id, iou_thresh)
    value, _, _ = _precision_from_match(m, conf_thresh)
    return value


def evaluate(
    preds: DetectionSet,
    gt: DatasetManifest,
    config: EvalConfig | None = None,
) -> EvalReport:
    """Full report: per-category AP and precision, mAP, config echo."""
    config = config or EvalConfig()
    gt_cat_ids = [c.id for c in gt.categories]
    if config.categories is not None:
        category_ids = list(config.categories)
        missing = [c for c in category_ids if c not in gt_cat_ids]
        if missing:
            raise ValidationError(f"categories not in ground truth: {missing}")
    else:
        category_ids = gt_cat_ids
    bad = sorted({r.category_id for r in preds.records} - set(gt_cat_ids))
    if bad:
        raise ValidationError(f"detections use unknown category ids: {bad}")

    per_category: dict[str, CategoryEval] = {}
    aps = []
    for cid in category_ids:
        m = match_predictions(preds, gt, cid, config.iou_thresh)
        ap = average_precision(m, config.interpolation)
        precision, tp, fp = _precision_from_match(m, config.conf_thresh)
        per_category[gt.category_name(cid)] = CategoryEval(
            ap=ap, precision=precision, tp=tp, fp=fp, gt=m.gt_count
        )
        aps.append(ap)

    return EvalReport(
        per_category=per_category,
        map=float(np.mean(aps)) if aps else 0.0,
        config={
            "iou_thresh": config.iou_thresh,
            "conf_thresh": config.conf_thresh,
            "interpolation": config.interpolation,
            "categories": category_ids,
        },
    )


_SHORT_NAMES = {"targetobject": "obj"}


def format_table(report: EvalReport) -> str:
    """Fixed-width report table; AP and precision shown as percentages."""
    names = list(report.per_category)
    headers = [f"{_SHORT_NAMES.get(n, n)} AP" for n in names] + ["mAP"]
    values = [report.per_category[n].ap * 100.0 for n in names] + [report.map * 100.0]
    width = max(10, max(len(h) for h in headers) + 2)

    lines = [
        "".join(h.rjust(width) for h in headers),
        "".join(f"{v:.1f}".rjust(width) for v in values),
        "",
    ]
    tau = report.config["conf_thresh"]
    parts = []
    for n in names:
        p = report.per_category[n].precision
        parts.append(f"{n}: " + ("n/a" if p is None else f"{p * 100.0:.1f}"))
    lines.append(f"precision @ {tau:g}   " + "   ".join(parts))
    return "\n".join(lines) + "\n"
