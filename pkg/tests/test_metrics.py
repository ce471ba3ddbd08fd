import numpy as np
import pytest

from lidarclust.metrics import (
    ClassConfig,
    EvaluationError,
    PanopticEvaluator,
    PanopticFrame,
    miou,
    panoptic_quality,
)

CFG = ClassConfig(
    thing_classes=frozenset({10, 30}),
    stuff_classes=frozenset({40, 70}),
    ignore_classes=frozenset({0}),
)


def random_frames(rng, n=1000, config=CFG, pred_like_gt=0.7):
    all_classes = sorted(config.thing_classes | config.stuff_classes | config.ignore_classes)
    gt_c = rng.choice(all_classes, size=n)
    gt_i = np.where(np.isin(gt_c, list(config.thing_classes)), rng.integers(1, 6, size=n), 0)
    pr_c = np.where(rng.random(n) < pred_like_gt, gt_c, rng.choice(all_classes, size=n))
    pr_i = np.where(
        np.isin(pr_c, list(config.thing_classes)),
        np.where(rng.random(n) < pred_like_gt, gt_i, rng.integers(1, 6, size=n)),
        0,
    )
    return PanopticFrame(gt_c, gt_i), PanopticFrame(pr_c, pr_i)


def test_class_config_rejects_overlap():
    with pytest.raises(ValueError):
        ClassConfig(frozenset({1}), frozenset({1}))


def test_frame_rejects_length_mismatch():
    with pytest.raises(ValueError):
        PanopticFrame([1, 2], [0])


def test_perfect_prediction():
    rng = np.random.default_rng(0)
    gt, _ = random_frames(rng)
    report = panoptic_quality(gt, gt, CFG, min_points=1)
    assert report.pq == pytest.approx(1.0)
    assert report.pq_dagger == pytest.approx(1.0)
    assert report.rq == pytest.approx(1.0)
    assert report.sq == pytest.approx(1.0)
    assert report.miou == pytest.approx(1.0)


def test_split_instance_hand_case():
    # 100-point gt instance split into two 50-point predictions: both
    # IoUs are exactly 0.5, not above it, so nothing matches
    gt = PanopticFrame(np.full(100, 10), np.full(100, 1))
    pred = PanopticFrame(np.full(100, 10), np.repeat([1, 2], 50))
    ev = PanopticEvaluator(CFG, min_points=1)
    ev.add_frame(gt, pred)
    report = ev.report()
    m = report.per_class[10]
    assert (m.tp, m.fp, m.fn) == (0, 2, 1)
    assert m.pq == 0.0


def test_eighty_twenty_hand_case():
    gt = PanopticFrame(np.full(100, 10), np.full(100, 1))
    pred = PanopticFrame(np.full(100, 10), np.repeat([1, 2], [80, 20]))
    report = panoptic_quality(gt, pred, CFG, min_points=1)
    m = report.per_class[10]
    assert (m.tp, m.fp, m.fn) == (1, 1, 0)
    assert m.pq == pytest.approx(0.8 / 1.5)
    assert m.rq == pytest.approx(1.0 / 1.5)
    assert m.sq == pytest.approx(0.8)


def test_pq_equals_rq_times_sq():
    rng = np.random.default_rng(1)
    ev = PanopticEvaluator(CFG, min_points=1)
    for _ in range(5):
        gt, pred = random_frames(rng)
        ev.add_frame(gt, pred)
    report = ev.report()
    for m in report.per_class.values():
        assert abs(m.pq - m.rq * m.sq) < 1e-9


def test_instance_id_permutation_invariance():
    rng = np.random.default_rng(2)
    gt, pred = random_frames(rng)
    base = panoptic_quality(gt, pred, CFG, min_points=1).as_dict()
    for _ in range(5):
        # random relabeling of predicted instance ids
        perm = rng.permutation(10_000) + 1
        shuffled = PanopticFrame(pred.classes, np.where(pred.instances > 0, perm[pred.instances], 0))
        got = panoptic_quality(gt, shuffled, CFG, min_points=1).as_dict()
        for k, v in base.items():
            assert got[k] == pytest.approx(v, abs=1e-12)


def test_matching_is_unique():
    rng = np.random.default_rng(3)
    ev = PanopticEvaluator(CFG, min_points=1)
    for _ in range(5):
        gt, pred = random_frames(rng)
        ev.add_frame(gt, pred)
    # IoU > 0.5 makes matches one-to-one, so TP can never exceed the
    # number of gt or predicted segments: TP + FN >= TP and TP + FP >= TP
    assert (ev.tp >= 0).all()
    assert (ev.iou_sum <= ev.tp + 1e-12).all()
    assert (ev.iou_sum >= 0.5 * ev.tp).all()


def test_min_points_moves_small_instances_to_ignore():
    # a 10-point gt instance is dropped; the prediction overlapping only
    # it must not count as FP points against anything else
    gt = PanopticFrame(np.full(10, 10), np.full(10, 1))
    pred = PanopticFrame(np.full(10, 10), np.full(10, 7))
    report = panoptic_quality(gt, pred, CFG, min_points=50)
    m = report.per_class[10]
    assert (m.tp, m.fp, m.fn) == (0, 0, 0)


def test_min_points_boundary():
    gt = PanopticFrame(np.full(50, 10), np.full(50, 1))
    pred = PanopticFrame(np.full(50, 10), np.full(50, 3))
    report = panoptic_quality(gt, pred, CFG, min_points=50)
    assert report.per_class[10].tp == 1  # exactly min_points counts


def test_ignored_points_excluded_from_union():
    # prediction spills onto ignore-class points; those points drop out of
    # the union so the IoU stays 1
    gt = PanopticFrame(np.array([10] * 60 + [0] * 40), np.array([1] * 60 + [0] * 40))
    pred = PanopticFrame(np.full(100, 10), np.full(100, 5))
    report = panoptic_quality(gt, pred, CFG, min_points=1)
    m = report.per_class[10]
    assert m.tp == 1
    assert report.per_class[10].pq == pytest.approx(1.0)


def test_stuff_single_segment_per_class():
    gt = PanopticFrame(np.full(100, 40), np.zeros(100))
    pred = PanopticFrame(np.array([40] * 70 + [70] * 30), np.zeros(100))
    report = panoptic_quality(gt, pred, CFG, min_points=1)
    m = report.per_class[40]
    assert (m.tp, m.fp, m.fn) == (1, 0, 0)
    assert m.pq == pytest.approx(0.7)  # segment IoU 0.7
    assert report.per_class[70].fp == 1  # the spill counts against class 70


def test_pq_dagger_uses_iou_for_stuff():
    gt = PanopticFrame(np.array([40] * 80 + [10] * 100), np.array([0] * 80 + [1] * 100))
    pred = PanopticFrame(
        np.array([40] * 60 + [70] * 20 + [10] * 100), np.array([0] * 80 + [1] * 100)
    )
    report = panoptic_quality(gt, pred, CFG, min_points=1)
    iou_40 = 60 / 80
    iou_70 = 0.0
    pq_10 = 1.0
    assert report.pq_dagger == pytest.approx((pq_10 + iou_40 + iou_70) / 3)


def test_merge_matches_single_evaluator():
    rng = np.random.default_rng(4)
    frames = [random_frames(rng) for _ in range(6)]
    single = PanopticEvaluator(CFG, min_points=1)
    for g, p in frames:
        single.add_frame(g, p)
    a = PanopticEvaluator(CFG, min_points=1)
    b = PanopticEvaluator(CFG, min_points=1)
    for g, p in frames[:3]:
        a.add_frame(g, p)
    for g, p in frames[3:]:
        b.add_frame(g, p)
    merged = a.merge(b).report().as_dict()
    want = single.report().as_dict()
    for k, v in want.items():
        assert merged[k] == pytest.approx(v, abs=1e-12)


def test_dataset_wide_accumulation_not_frame_mean():
    # one frame with a TP, one with only a FN: PQ uses pooled counts
    gt1 = PanopticFrame(np.full(100, 10), np.full(100, 1))
    gt2 = PanopticFrame(np.full(100, 10), np.full(100, 1))
    miss = PanopticFrame(np.full(100, 40), np.zeros(100))
    ev = PanopticEvaluator(CFG, min_points=1)
    ev.add_frame(gt1, gt1)
    ev.add_frame(gt2, miss)
    m = ev.report().per_class[10]
    assert (m.tp, m.fn) == (1, 1)
    assert m.pq == pytest.approx(1.0 / 1.5)  # not the frame mean (1 + 0)/2


def test_errors_length_and_unknown_class():
    ev = PanopticEvaluator(CFG)
    with pytest.raises(EvaluationError, match="points"):
        ev.add_frame(PanopticFrame([10], [1]), PanopticFrame([10, 10], [1, 1]))
    with pytest.raises(EvaluationError, match="unknown"):
        ev.add_frame(PanopticFrame([99], [1]), PanopticFrame([10], [1]))


def test_miou_identity_and_disjoint():
    per, mean = miou([10, 40, 70], [10, 40, 70], CFG)
    assert mean == pytest.approx(1.0)
    per, mean = miou([10, 10], [30, 30], CFG)
    assert per[10] == 0.0
    assert per[30] == 0.0


def test_miou_matches_confusion_oracle():
    rng = np.random.default_rng(5)
    classes = sorted(CFG.thing_classes | CFG.stuff_classes)
    gt = rng.choice(classes + [0], size=1000)
    pred = rng.choice(classes, size=1000)
    per, mean = miou(gt, pred, CFG)
    keep = gt != 0  # ignore class excluded
    for cid in classes:
        inter = ((gt == cid) & (pred == cid) & keep).sum()
        union = (((gt == cid) | (pred == cid)) & keep).sum()
        assert per[cid] == pytest.approx(inter / union if union else 0.0)


def test_report_key_values_format():
    gt = PanopticFrame(np.full(100, 10), np.full(100, 1))
    report = panoptic_quality(gt, gt, CFG, min_points=1)
    text = report.key_values()
    assert "min_points 1" in text
    assert "PQ 100.0" in text
    assert "mIoU 100.0" in text
    table = report.table(CFG)
    assert "PQ" in table and "TP" in table
