"""Segment matching and the PQ/SQ/RQ family over id-map + segments_info pairs.

A ground-truth and a predicted segment match when they share a category and
their IoU over non-void ground-truth pixels exceeds 0.5; that bound makes the
matching unique, so no assignment search is needed. Predicted segments mostly
covering ground-truth void are discarded rather than counted as false
positives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..annotator import CategoryRegistry
from ..errors import DimensionMismatchError, MalformedSegmentsError

_OFFSET = 1 << 32


@dataclass(frozen=True)
class SegmentRef:
    """Identifies one segment of one image within a match set."""

    image_id: int
    segment_id: int
    category_id: int
    area: int


@dataclass
class PanopticMatchSet:
    """Per-category true/false positive and false negative segment lists."""

    tp: dict[int, list[tuple[SegmentRef, SegmentRef, float]]] = field(default_factory=dict)
    fp: dict[int, list[SegmentRef]] = field(default_factory=dict)
    fn: dict[int, list[SegmentRef]] = field(default_factory=dict)

    def categories(self) -> list[int]:
        return sorted(set(self.tp) | set(self.fp) | set(self.fn))

    def gt_categories(self) -> set[int]:
        return {c for c in self.categories() if self.tp.get(c) or self.fn.get(c)}

    def add(self, other: "PanopticMatchSet") -> None:
        for cat, items in other.tp.items():
            self.tp.setdefault(cat, []).extend(items)
        for cat, items in other.fp.items():
            self.fp.setdefault(cat, []).extend(items)
        for cat, items in other.fn.items():
            self.fn.setdefault(cat, []).extend(items)


def _check_segments(id_map: np.ndarray, segments_info: list[dict], side: str) -> dict[int, dict]:
    ids_present = {int(v) for v in np.unique(id_map) if v != 0}
    by_id = {}
    for seg in segments_info:
        sid = int(seg["id"])
        if sid in by_id:
            raise MalformedSegmentsError(f"{side}: duplicate segment id {sid}")
        by_id[sid] = seg
    if ids_present != set(by_id):
        raise MalformedSegmentsError(
            f"{side}: segment ids differ between id map and segments_info "
            f"(map-only {sorted(ids_present - set(by_id))}, info-only {sorted(set(by_id) - ids_present)})"
        )
    return by_id


def pq_match(
    gt_map: np.ndarray,
    gt_segments: list[dict],
    pred_map: np.ndarray,
    pred_segments: list[dict],
    image_id: int = 0,
) -> PanopticMatchSet:
    """Match the segments of one image pair.

    IoU uses only pixels where the ground truth is not void: a predicted
    segment's area is first reduced by its overlap with ground-truth void.
    """
    gt_map = np.asarray(gt_map, dtype=np.int64)
    pred_map = np.asarray(pred_map, dtype=np.int64)
    if gt_map.shape != pred_map.shape:
        raise DimensionMismatchError(f"ground truth {gt_map.shape} vs prediction {pred_map.shape}")
    gt_by_id = _check_segments(gt_map, gt_segments, "ground truth")
    pred_by_id = _check_segments(pred_map, pred_segments, "prediction")

    combined = gt_map * _OFFSET + pred_map
    values, counts = np.unique(combined, return_counts=True)
    inter: dict[tuple[int, int], int] = {}
    for v, c in zip(values.tolist(), counts.tolist()):
        inter[(v // _OFFSET, v % _OFFSET)] = int(c)

    gt_area: dict[int, int] = {sid: 0 for sid in gt_by_id}
    pred_area: dict[int, int] = {sid: 0 for sid in pred_by_id}
    for (g, p), c in inter.items():
        if g != 0:
            gt_area[g] += c
        if p != 0:
            pred_area[p] += c
    pred_void = {sid: inter.get((0, sid), 0) for sid in pred_by_id}

    def gt_ref(sid):
        return SegmentRef(image_id, sid, int(gt_by_id[sid]["category_id"]), gt_area[sid])

    def pred_ref(sid):
        return SegmentRef(image_id, sid, int(pred_by_id[sid]["category_id"]), pred_area[sid])

    matches = PanopticMatchSet()
    matched_gt: set[int] = set()
    matched_pred: set[int] = set()
    for (g, p), c in sorted(inter.items()):
        if g == 0 or p == 0:
            continue
        cat_g = int(gt_by_id[g]["category_id"])
        cat_p = int(pred_by_id[p]["category_id"])
        if cat_g != cat_p:
            continue
        union = gt_area[g] + (pred_area[p] - pred_void[p]) - c
        iou = c / union if union > 0 else 0.0
        if iou > 0.5:
            matches.tp.setdefault(cat_g, []).append((gt_ref(g), pred_ref(p), iou))
            matched_gt.add(g)
            matched_pred.add(p)

    for g in sorted(gt_by_id):
        if g not in matched_gt:
            ref = gt_ref(g)
            matches.fn.setdefault(ref.category_id, []).append(ref)
    for p in sorted(pred_by_id):
        if p in matched_pred:
            continue
        if pred_area[p] > 0 and pred_void[p] / pred_area[p] > 0.5:
            continue  # mostly over unlabeled ground truth: discarded, not penalized
        ref = pred_ref(p)
        matches.fp.setdefault(ref.category_id, []).append(ref)
    return matches


@dataclass(frozen=True)
class ClassPQ:
    pq: float
    sq: float
    rq: float
    tp: int
    fp: int
    fn: int
    iou_sum: float


@dataclass(frozen=True)
class PanopticMetrics:
    """Per-class PQ/SQ/RQ and unweighted group means over classes present in GT."""

    per_class: dict[int, ClassPQ]
    groups: dict[str, tuple[float, float, float]]  # all/things/stuff -> (pq, sq, rq)

    def to_json_dict(self) -> dict:
        return {
            "groups": {
                name: {"PQ": pq, "SQ": sq, "RQ": rq} for name, (pq, sq, rq) in self.groups.items()
            },
            "per_class": {
                str(lbl): {
                    "PQ": c.pq, "SQ": c.sq, "RQ": c.rq,
                    "TP": c.tp, "FP": c.fp, "FN": c.fn,
                }
                for lbl, c in self.per_class.items()
            },
        }


def pq_metrics(matches: PanopticMatchSet, registry: CategoryRegistry) -> PanopticMetrics:
    """Reduce a match set to per-class and group PQ/SQ/RQ.

    Group means are unweighted over classes with ground-truth presence;
    classes that only ever appear as false positives are reported per class
    but stay out of the means.
    """
    per_class: dict[int, ClassPQ] = {}
    for cat in matches.categories():
        tp_items = matches.tp.get(cat, [])
        tp = len(tp_items)
        fp = len(matches.fp.get(cat, []))
        fn = len(matches.fn.get(cat, []))
        iou_sum = float(sum(iou for _, _, iou in tp_items))
        denom = tp + 0.5 * fp + 0.5 * fn
        pq = iou_sum / denom if denom > 0 else 0.0
        sq = iou_sum / tp if tp > 0 else 0.0
        rq = tp / denom if denom > 0 else 0.0
        per_class[cat] = ClassPQ(pq=pq, sq=sq, rq=rq, tp=tp, fp=fp, fn=fn, iou_sum=iou_sum)

    gt_present = matches.gt_categories()
    groups = {}
    for name in ("all", "things", "stuff"):
        cats = [
            c
            for c in sorted(gt_present)
            if name == "all"
            or (name == "things" and registry.has(c) and registry.is_thing(c))
            or (name == "stuff" and registry.has(c) and not registry.is_thing(c))
        ]
        if cats:
            groups[name] = (
                float(np.mean([per_class[c].pq for c in cats])),
                float(np.mean([per_class[c].sq for c in cats])),
                float(np.mean([per_class[c].rq for c in cats])),
            )
        else:
            groups[name] = (0.0, 0.0, 0.0)
    return PanopticMetrics(per_class=per_class, groups=groups)
