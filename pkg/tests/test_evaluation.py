"""Matching, AP integration, threshold precision, and report assembly."""

import random

import numpy as np
import pytest

from bgmix.core import (
    Annotation,
    BoundBox,
    Category,
    DatasetManifest,
    DetectionRecord,
    ImageEntry,
    ValidationError,
)
from bgmix.dataset_io import DetectionSet
from bgmix.evaluation import (
    ALL_POINT,
    VOC11,
    EvalConfig,
    MatchedPrediction,
    MatchResult,
    average_precision,
    evaluate,
    format_table,
    match_predictions,
    precision_at_threshold,
    sort_predictions,
)

from conftest import HAND, OBJ
from oracles import pr_curve_ap, threshold_precision


def gt_manifest(annotations, n_images=4):
    entries = [ImageEntry(i, f"im_{i}.png", 100, 100) for i in range(1, n_images + 1)]
    cats = [Category(HAND, "hand"), Category(OBJ, "targetobject")]
    return DatasetManifest(entries, annotations, cats)


def pred(image_id, cat, box, score):
    return DetectionRecord(image_id, cat, box, score)


def flags_result(flags, gt_count):
    scores = np.linspace(0.95, 0.05, num=max(len(flags), 1))
    preds = [MatchedPrediction(float(s), f, None) for s, f in zip(scores, flags)]
    return MatchResult(preds, gt_count)


class TestSortPredictions:
    def test_score_desc_then_image_then_box(self):
        a = pred(2, HAND, BoundBox(0, 0, 1, 1), 0.9)
        b = pred(1, HAND, BoundBox(0, 0, 1, 1), 0.9)
        c = pred(1, HAND, BoundBox(5, 0, 1, 1), 0.9)
        d = pred(1, HAND, BoundBox(0, 0, 1, 1), 0.95)
        assert sort_predictions([a, c, d, b]) == [d, b, c, a]


class TestMatching:
    def _scene(self):
        anns = [
            Annotation(1, 1, HAND, BoundBox(10, 10, 20, 20)),
            Annotation(2, 1, HAND, BoundBox(50, 50, 20, 20)),
        ]
        return gt_manifest(anns)

    def test_exact_hit_is_tp(self):
        m = match_predictions(
            [pred(1, HAND, BoundBox(10, 10, 20, 20), 0.9)], self._scene(), HAND
        )
        assert [p.is_true_positive for p in m.predictions] == [True]
        assert m.predictions[0].matched_gt == 1
        assert m.gt_count == 2

    def test_double_detection_is_fp(self):
        preds = [
            pred(1, HAND, BoundBox(10, 10, 20, 20), 0.9),
            pred(1, HAND, BoundBox(12, 12, 20, 20), 0.8),  # same object again
        ]
        m = match_predictions(preds, self._scene(), HAND)
        assert [p.is_true_positive for p in m.predictions] == [True, False]

    def test_low_iou_is_fp(self):
        m = match_predictions(
            [pred(1, HAND, BoundBox(25, 25, 20, 20), 0.9)], self._scene(), HAND
        )
        assert not m.predictions[0].is_true_positive

    def test_matching_is_per_image(self):
        # right box, wrong image
        m = match_predictions(
            [pred(2, HAND, BoundBox(10, 10, 20, 20), 0.9)], self._scene(), HAND
        )
        assert not m.predictions[0].is_true_positive

    def test_greedy_takes_highest_overlap(self):
        anns = [
            Annotation(1, 1, HAND, BoundBox(0, 0, 10, 10)),
            Annotation(2, 1, HAND, BoundBox(2, 2, 10, 10)),
        ]
        m = match_predictions(
            [pred(1, HAND, BoundBox(2, 2, 10, 10), 0.9)], gt_manifest(anns), HAND
        )
        assert m.predictions[0].matched_gt == 2

    def test_category_isolation(self):
        anns = [Annotation(1, 1, OBJ, BoundBox(10, 10, 20, 20))]
        m = match_predictions(
            [pred(1, HAND, BoundBox(10, 10, 20, 20), 0.9)], gt_manifest(anns), HAND
        )
        assert not m.predictions[0].is_true_positive
        assert m.gt_count == 0

    def test_accepts_detection_set(self):
        ds = DetectionSet(records=[pred(1, HAND, BoundBox(10, 10, 20, 20), 0.9)])
        m = match_predictions(ds, self._scene(), HAND)
        assert m.predictions[0].is_true_positive

    def test_iou_exactly_at_threshold_matches(self):
        anns = [Annotation(1, 1, HAND, BoundBox(0, 0, 10, 10))]
        # half-overlapping box: inter 50, union 150 -> iou 1/3
        m = match_predictions(
            [pred(1, HAND, BoundBox(0, 5, 10, 10), 0.9)],
            gt_manifest(anns),
            HAND,
            iou_thresh=1 / 3,
        )
        assert m.predictions[0].is_true_positive


class TestAveragePrecision:
    def test_frozen_tp_fp_tp_over_two_gt(self):
        m = flags_result([True, False, True], gt_count=2)
        assert average_precision(m, ALL_POINT) == pytest.approx(5 / 6, abs=1e-12)

    def test_frozen_voc11_same_instance(self):
        m = flags_result([True, False, True], gt_count=2)
        assert average_precision(m, VOC11) == pytest.approx(28 / 33, abs=1e-12)

    def test_perfect_detector_scores_one(self):
        m = flags_result([True, True, True], gt_count=3)
        assert average_precision(m, ALL_POINT) == 1.0
        assert average_precision(m, VOC11) == pytest.approx(1.0)

    def test_all_false_scores_zero(self):
        m = flags_result([False, False], gt_count=3)
        assert average_precision(m, ALL_POINT) == 0.0

    def test_zero_gt_no_preds_is_one(self):
        assert average_precision(flags_result([], 0)) == 1.0

    def test_zero_gt_with_preds_is_zero(self):
        assert average_precision(flags_result([False], 0)) == 0.0

    def test_no_preds_with_gt_is_zero(self):
        assert average_precision(flags_result([], 5)) == 0.0

    def test_matches_enumeration_oracle(self):
        rng = random.Random(77)
        for _ in range(200):
            n = rng.randrange(0, 20)
            flags = [rng.random() < 0.5 for _ in range(n)]
            gt = rng.randrange(max(1, sum(flags)), sum(flags) + 8)
            got = average_precision(flags_result(flags, gt), ALL_POINT)
            want = pr_curve_ap(flags, gt)
            assert got == pytest.approx(want, abs=1e-12)


class TestPrecisionAtThreshold:
    def _scene(self):
        anns = [
            Annotation(1, 1, HAND, BoundBox(10, 10, 20, 20)),
            Annotation(2, 2, HAND, BoundBox(30, 30, 20, 20)),
        ]
        return gt_manifest(anns)

    def test_frozen_two_tp_one_fp(self):
        preds = [
            pred(1, HAND, BoundBox(10, 10, 20, 20), 0.9),
            pred(2, HAND, BoundBox(30, 30, 20, 20), 0.5),
            pred(3, HAND, BoundBox(0, 0, 20, 20), 0.3),
        ]
        got = precision_at_threshold(preds, self._scene(), HAND, conf_thresh=0.1)
        assert got == pytest.approx(2 / 3, abs=1e-12)

    def test_none_when_nothing_survives(self):
        preds = [pred(1, HAND, BoundBox(10, 10, 20, 20), 0.4)]
        assert precision_at_threshold(preds, self._scene(), HAND, conf_thresh=0.5) is None

    def test_boundary_score_survives(self):
        preds = [pred(1, HAND, BoundBox(10, 10, 20, 20), 0.5)]
        assert precision_at_threshold(preds, self._scene(), HAND, conf_thresh=0.5) == 1.0

    def test_filter_then_match_equals_match_then_filter(self):
        # greedy order is prefix-stable, so both routes must agree exactly
        rng = np.random.default_rng(31)
        anns = []
        aid = 1
        for img in range(1, 5):
            for _ in range(3):
                x, y = rng.integers(0, 70, 2)
                anns.append(Annotation(aid, img, HAND, BoundBox(float(x), float(y), 20, 20)))
                aid += 1
        gt = gt_manifest(anns)
        preds = []
        for ann in anns:
            if rng.random() < 0.8:
                dx, dy = rng.integers(-6, 7, 2)
                preds.append(
                    pred(
                        ann.image_id,
                        HAND,
                        BoundBox(ann.bbox.x + float(dx), ann.bbox.y + float(dy), 20, 20),
                        float(rng.random()),
                    )
                )
        for tau in (0.0, 0.2, 0.5, 0.8):
            direct = precision_at_threshold(preds, gt, HAND, conf_thresh=tau)
            survivors = [p for p in preds if p.score >= tau]
            m = match_predictions(survivors, gt, HAND)
            want = threshold_precision(
                [(p.score, p.is_true_positive) for p in m.predictions], tau
            )
            assert direct == want


class TestEvaluate:
    def _setup(self):
        anns = [
            Annotation(1, 1, HAND, BoundBox(10, 10, 20, 20)),
            Annotation(2, 1, OBJ, BoundBox(50, 50, 20, 20)),
        ]
        gt = gt_manifest(anns)
        preds = DetectionSet(
            records=[
                pred(1, HAND, BoundBox(10, 10, 20, 20), 0.9),
                pred(1, OBJ, BoundBox(50, 50, 20, 20), 0.8),
            ]
        )
        return gt, preds

    def test_map_is_mean_of_category_aps(self):
        gt, preds = self._setup()
        report = evaluate(preds, gt)
        assert set(report.per_category) == {"hand", "targetobject"}
        aps = [r.ap for r in report.per_category.values()]
        assert report.map == pytest.approx(sum(aps) / 2)
        assert report.per_category["hand"].ap == 1.0

    def test_config_echoed(self):
        gt, preds = self._setup()
        cfg = EvalConfig(iou_thresh=0.6, conf_thresh=0.25, interpolation=VOC11)
        report = evaluate(preds, gt, cfg)
        assert report.config == {
            "iou_thresh": 0.6,
            "conf_thresh": 0.25,
            "interpolation": VOC11,
            "categories": [HAND, OBJ],
        }

    def test_shuffle_invariance(self):
        rng = np.random.default_rng(17)
        anns = []
        aid = 1
        for img in range(1, 5):
            for _ in range(4):
                x, y = rng.integers(0, 70, 2)
                cat = HAND if rng.random() < 0.5 else OBJ
                anns.append(Annotation(aid, img, cat, BoundBox(float(x), float(y), 18, 22)))
                aid += 1
        gt = gt_manifest(anns)
        records = []
        for ann in anns:
            dx, dy = rng.integers(-8, 9, 2)
            records.append(
                pred(
                    ann.image_id,
                    ann.category_id,
                    BoundBox(ann.bbox.x + float(dx), ann.bbox.y + float(dy), 18, 22),
                    float(rng.random()),
                )
            )
        base = evaluate(DetectionSet(records=list(records)), gt).to_dict()
        shuffled = list(records)
        random.Random(5).shuffle(shuffled)
        assert evaluate(DetectionSet(records=shuffled), gt).to_dict() == base

    def test_unknown_prediction_category_rejected(self):
        gt, _ = self._setup()
        bad = DetectionSet(records=[pred(1, 9, BoundBox(0, 0, 5, 5), 0.5)])
        with pytest.raises(ValidationError, match="unknown category"):
            evaluate(bad, gt)

    def test_category_restriction(self):
        gt, preds = self._setup()
        report = evaluate(preds, gt, EvalConfig(categories=(HAND,)))
        assert list(report.per_category) == ["hand"]
        assert report.map == report.per_category["hand"].ap

    def test_restriction_to_missing_category_rejected(self):
        gt, preds = self._setup()
        with pytest.raises(ValidationError, match="not in ground truth"):
            evaluate(preds, gt, EvalConfig(categories=(5,)))

    def test_no_predictions_for_category_counts_zero(self):
        gt, _ = self._setup()
        report = evaluate(DetectionSet(records=[]), gt)
        hand = report.per_category["hand"]
        assert (hand.ap, hand.tp, hand.fp, hand.gt) == (0.0, 0, 0, 1)
        assert hand.precision is None


class TestFormatTable:
    def test_columns_and_precision_line(self):
        gt = gt_manifest([Annotation(1, 1, HAND, BoundBox(10, 10, 20, 20))])
        preds = DetectionSet(records=[pred(1, HAND, BoundBox(10, 10, 20, 20), 0.9)])
        table = format_table(evaluate(preds, gt))
        assert "hand AP" in table
        assert "obj AP" in table
        assert "mAP" in table
        assert "100.0" in table
        assert "precision @ 0.1" in table
        assert "n/a" in table  # targetobject had no surviving predictions

    def test_config_invalid_values_rejected(self):
        with pytest.raises(ValidationError):
            EvalConfig(iou_thresh=0.0)
        with pytest.raises(ValidationError):
            EvalConfig(conf_thresh=-0.1)
        with pytest.raises(ValidationError):
            EvalConfig(interpolation="area")
