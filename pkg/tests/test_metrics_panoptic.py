"""PQ matching against the exhaustive set-arithmetic oracle, and PQ/SQ/RQ math."""

import numpy as np
import pytest

from conftest import brute_force_pq_match, random_panoptic_pair
from geopanoptic.errors import DimensionMismatchError, MalformedSegmentsError
from geopanoptic.metrics import PanopticMatchSet, SegmentRef, pq_match, pq_metrics


def test_perfect_prediction_all_tp(registry):
    gt = np.zeros((6, 6), int)
    gt[:3] = 1
    gt[3:, :3] = 2
    info = [{"id": 1, "category_id": 1}, {"id": 2, "category_id": 6}]
    ms = pq_match(gt, info, gt, info)
    assert ms.tp[1][0][2] == 1.0
    assert ms.tp[6][0][2] == 1.0
    assert not ms.fp and not ms.fn


def test_iou_over_nonvoid_gt_example():
    gt = np.full((4, 4), 9, int)
    gt[0, :] = 1
    gt[1, :] = 1
    pred = np.full((4, 4), 9, int)
    pred[0, :3] = 5
    pred[1, :3] = 5
    pred[2, :2] = 5
    ms = pq_match(
        gt, [{"id": 1, "category_id": 6}, {"id": 9, "category_id": 1}],
        pred, [{"id": 5, "category_id": 6}, {"id": 9, "category_id": 1}],
    )
    assert ms.tp[6][0][2] == pytest.approx(0.6, abs=1e-12)


def test_category_gate_fn_plus_fp():
    gt = np.zeros((4, 4), int)
    gt[1:3, 1:3] = 1
    pred = gt.copy()
    ms = pq_match(gt, [{"id": 1, "category_id": 6}], pred, [{"id": 1, "category_id": 13}])
    assert len(ms.fn[6]) == 1
    assert len(ms.fp[13]) == 1


def test_mostly_void_prediction_discarded():
    gt = np.zeros((6, 6), int)
    gt[0, 0] = 1
    pred = np.zeros((6, 6), int)
    pred[3:, :] = 4  # 18 px entirely over void
    ms = pq_match(gt, [{"id": 1, "category_id": 6}], pred, [{"id": 4, "category_id": 6}])
    assert not ms.fp
    assert len(ms.fn[6]) == 1


def test_malformed_segments_detected():
    gt = np.zeros((3, 3), int)
    gt[0, 0] = 1
    with pytest.raises(MalformedSegmentsError):
        pq_match(gt, [{"id": 2, "category_id": 6}], gt, [{"id": 1, "category_id": 6}])
    with pytest.raises(DimensionMismatchError):
        pq_match(np.zeros((2, 2), int), [], np.zeros((3, 3), int), [])


def test_match_agrees_with_brute_force_oracle():
    rng = np.random.default_rng(0)
    for _ in range(200):
        (gt_map, gt_cats, gt_info), (pred_map, pred_cats, pred_info) = random_panoptic_pair(rng)
        ms = pq_match(gt_map, gt_info, pred_map, pred_info)
        tp_o, fp_o, fn_o = brute_force_pq_match(gt_map, gt_cats, pred_map, pred_cats)
        tp_got = sorted((g.segment_id, p.segment_id) for items in ms.tp.values() for g, p, _ in items)
        assert tp_got == sorted((g, p) for g, p, _ in tp_o)
        fp_got = sorted(r.segment_id for items in ms.fp.values() for r in items)
        assert fp_got == fp_o
        fn_got = sorted(r.segment_id for items in ms.fn.values() for r in items)
        assert fn_got == fn_o
        iou_sum_got = sum(iou for items in ms.tp.values() for _, _, iou in items)
        iou_sum_oracle = sum(iou for _, _, iou in tp_o)
        assert iou_sum_got == pytest.approx(iou_sum_oracle, abs=1e-9)


def test_pq_sq_rq_hand_arithmetic(registry):
    ms = PanopticMatchSet()
    ms.tp[6] = [(SegmentRef(0, 1, 6, 8), SegmentRef(0, 5, 6, 10), 0.6)]
    ms.fp[6] = [SegmentRef(0, 7, 6, 3)]
    m = pq_metrics(ms, registry)
    c = m.per_class[6]
    assert c.pq == pytest.approx(0.4, abs=1e-12)
    assert c.sq == pytest.approx(0.6, abs=1e-12)
    assert c.rq == pytest.approx(1 / 1.5, abs=1e-12)


def test_pq_equals_sq_times_rq(registry):
    rng = np.random.default_rng(1)
    for _ in range(300):
        ms = PanopticMatchSet()
        for cat in (1, 2, 6, 13):
            n_tp = int(rng.integers(0, 5))
            ms.tp[cat] = [
                (SegmentRef(0, i, cat, 10), SegmentRef(0, 100 + i, cat, 10),
                 float(rng.uniform(0.5001, 1.0)))
                for i in range(n_tp)
            ]
            ms.fp[cat] = [SegmentRef(0, 200 + i, cat, 5) for i in range(int(rng.integers(0, 4)))]
            ms.fn[cat] = [SegmentRef(0, 300 + i, cat, 5) for i in range(int(rng.integers(0, 4)))]
        m = pq_metrics(ms, registry)
        for c in m.per_class.values():
            assert c.pq == pytest.approx(c.sq * c.rq, abs=1e-9)


def test_class_without_gt_or_prediction_excluded(registry):
    ms = PanopticMatchSet()
    ms.tp[1] = [(SegmentRef(0, 1, 1, 4), SegmentRef(0, 2, 1, 4), 1.0)]
    m = pq_metrics(ms, registry)
    assert set(m.per_class) == {1}
    assert m.groups["all"] == (1.0, 1.0, 1.0)
    assert m.groups["stuff"] == (1.0, 1.0, 1.0)
    assert m.groups["things"] == (0.0, 0.0, 0.0)


def test_fp_only_class_reported_but_outside_means(registry):
    ms = PanopticMatchSet()
    ms.tp[1] = [(SegmentRef(0, 1, 1, 4), SegmentRef(0, 2, 1, 4), 1.0)]
    ms.fp[6] = [SegmentRef(0, 9, 6, 4)]
    m = pq_metrics(ms, registry)
    assert m.per_class[6].pq == 0.0
    assert m.groups["all"] == (1.0, 1.0, 1.0)  # class 6 has no ground truth


def test_injected_fp_never_raises_pq(registry):
    rng = np.random.default_rng(2)
    for _ in range(100):
        (gt_map, _, gt_info), (pred_map, pred_cats, pred_info) = random_panoptic_pair(rng)
        base = pq_metrics(pq_match(gt_map, gt_info, pred_map, pred_info), registry)
        # inject a pred segment over pixels that are pred-void but gt-non-void
        room = (pred_map == 0) & (gt_map != 0)
        if not room.any():
            continue
        gt_cats_present = {int(i["category_id"]) for i in gt_info}
        rows, cols = np.nonzero(room)
        take = rng.integers(1, min(4, len(rows)) + 1)
        pred2 = pred_map.copy()
        new_id = 999
        chosen = rng.choice(len(rows), size=int(take), replace=False)
        # place only where the underlying gt category differs, so no match forms
        cat = int(rng.choice(sorted(gt_cats_present)))
        placed = False
        gt_by_id = {i["id"]: i["category_id"] for i in gt_info}
        for k in chosen:
            r, c = int(rows[k]), int(cols[k])
            if gt_by_id[int(gt_map[r, c])] != cat:
                pred2[r, c] = new_id
                placed = True
        if not placed:
            continue
        pred_info2 = pred_info + [{"id": new_id, "category_id": cat}]
        worse = pq_metrics(pq_match(gt_map, gt_info, pred2, pred_info2), registry)
        assert worse.groups["all"][0] <= base.groups["all"][0] + 1e-12


def test_removing_tp_never_raises_rq(registry):
    rng = np.random.default_rng(3)
    for _ in range(100):
        ms = PanopticMatchSet()
        cat = 6
        n_tp = int(rng.integers(1, 6))
        ms.tp[cat] = [
            (SegmentRef(0, i, cat, 10), SegmentRef(0, 100 + i, cat, 10), float(rng.uniform(0.6, 1.0)))
            for i in range(n_tp)
        ]
        ms.fp[cat] = [SegmentRef(0, 200 + i, cat, 5) for i in range(int(rng.integers(0, 3)))]
        ms.fn[cat] = [SegmentRef(0, 300 + i, cat, 5) for i in range(int(rng.integers(0, 3)))]
        base = pq_metrics(ms, registry).per_class[cat].rq
        # drop one TP: its ground truth becomes FN, its prediction FP
        dropped = ms.tp[cat].pop()
        ms.fn[cat] = ms.fn.get(cat, []) + [dropped[0]]
        ms.fp[cat] = ms.fp.get(cat, []) + [dropped[1]]
        after = pq_metrics(ms, registry).per_class[cat].rq
        assert after <= base + 1e-12


def test_segment_id_relabeling_invariance(registry):
    rng = np.random.default_rng(4)
    for _ in range(50):
        (gt_map, _, gt_info), (pred_map, _, pred_info) = random_panoptic_pair(rng)
        base = pq_metrics(pq_match(gt_map, gt_info, pred_map, pred_info), registry)
        # consistently relabel prediction segment ids
        ids = sorted({int(v) for v in np.unique(pred_map) if v != 0})
        mapping = {old: 1000 + i for i, old in enumerate(rng.permutation(ids).tolist())}
        pred2 = pred_map.copy()
        for old, new in mapping.items():
            pred2[pred_map == old] = new
        info2 = [{"id": mapping[i["id"]], "category_id": i["category_id"]} for i in pred_info]
        again = pq_metrics(pq_match(gt_map, gt_info, pred2, info2), registry)
        assert again.groups == base.groups
