"""Detection/mask scoring: IoU, greedy score-ordered matching, 101-point AP.

The headline AP averages thresholds 0.50:0.05:0.95; AP50/AP75 fix one
threshold; the size-bucketed variants restrict ground truth (and the match
bookkeeping) to small/medium/large areas. Detections are pooled across images
per category before the precision-recall sweep.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyUnionError, ZeroGroundTruthWarning
from ..maskops import decode_rle, fill_rings, flat_to_rings

IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
RECALL_POINTS = np.array([i / 100 for i in range(101)])
AREA_BUCKETS = {
    "all": (0.0, float("inf")),
    "small": (0.0, 32.0**2),
    "medium": (32.0**2, 96.0**2),
    "large": (96.0**2, float("inf")),
}


@dataclass(frozen=True)
class Detection:
    image_id: int
    category_id: int
    score: float
    bbox: tuple[float, float, float, float]
    mask: object | None = None  # list of flat polygon rings, or an RLE dict

    def __post_init__(self):
        if not np.isfinite(self.score):
            raise ValueError(f"detection score must be finite, got {self.score}")
        if self.bbox[2] <= 0 or self.bbox[3] <= 0:
            raise ValueError(f"detection bbox must have positive size, got {self.bbox}")


@dataclass(frozen=True)
class GroundTruthObject:
    image_id: int
    category_id: int
    bbox: tuple[float, float, float, float]
    area: float
    mask: object | None = None  # list of flat polygon rings


def iou_box(a, b) -> float:
    """Intersection over union of two (x, y, w, h) boxes."""
    ax, ay, aw, ah = (float(v) for v in a)
    bx, by, bw, bh = (float(v) for v in b)
    iw = min(ax + aw, bx + bw) - max(ax, bx)
    ih = min(ay + ah, by + bh) - max(ay, by)
    inter = max(iw, 0.0) * max(ih, 0.0)
    union = aw * ah + bw * bh - inter
    if union <= 0:
        raise EmptyUnionError("both boxes are degenerate")
    return inter / union


def iou_mask(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two boolean masks on a shared canvas."""
    inter = int(np.logical_and(a, b).sum())
    union = int(np.logical_or(a, b).sum())
    if union == 0:
        raise EmptyUnionError("both masks are empty")
    return inter / union


def rasterize_mask(mask_spec, canvas: tuple[int, int]) -> np.ndarray:
    """Polygon list or RLE dict -> boolean mask on (height, width)."""
    h, w = canvas
    if isinstance(mask_spec, dict):
        size = tuple(int(v) for v in mask_spec["size"])
        if size != (h, w):
            raise ValueError(f"RLE size {size} does not match the image canvas {(h, w)}")
        return decode_rle(mask_spec["counts"], size)
    return fill_rings(flat_to_rings(mask_spec), w, h)


def match_detections(gts: list, dets: list, iou_threshold: float, iou_of) -> list[int | None]:
    """Greedy matching within one (image, category) group.

    Detections are taken in descending score order (ties keep input order);
    each claims the unmatched ground truth with the highest IoU at or above
    the threshold. Returns, per detection in input order, the matched ground
    truth index or None.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    taken = [False] * len(gts)
    result: list[int | None] = [None] * len(dets)
    for di in order:
        best_iou = 0.0
        best_gi = None
        for gi, gt in enumerate(gts):
            if taken[gi]:
                continue
            iou = iou_of(dets[di], gt)
            if iou >= iou_threshold and iou > best_iou:
                best_iou = iou
                best_gi = gi
        if best_gi is not None:
            taken[best_gi] = True
            result[di] = best_gi
    return result


def average_precision(tp_flags: np.ndarray, n_gt: int) -> float:
    """101-point interpolated AP from score-ordered true-positive flags.

    At each recall point the interpolated precision is the maximum precision
    at any recall not below it, so trailing false positives cannot lower the
    curve before the last recall gain.
    """
    if n_gt <= 0:
        raise ValueError("average_precision needs at least one ground-truth object")
    tp_flags = np.asarray(tp_flags, dtype=bool)
    if tp_flags.size == 0:
        return 0.0
    tp = np.cumsum(tp_flags)
    fp = np.cumsum(~tp_flags)
    recall = tp / n_gt
    precision = tp / (tp + fp)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_POINTS, side="left")
    return float(np.mean(np.where(idx < len(envelope), envelope[np.minimum(idx, len(envelope) - 1)], 0.0)))


@dataclass(frozen=True)
class DetectionMetrics:
    ap: float
    ap50: float
    ap75: float
    ap_small: float | None
    ap_medium: float | None
    ap_large: float | None
    per_class: dict[int, float]

    def to_json_dict(self) -> dict:
        return {
            "AP": self.ap,
            "AP50": self.ap50,
            "AP75": self.ap75,
            "APS": self.ap_small,
            "APM": self.ap_medium,
            "APL": self.ap_large,
            "per_class": {str(k): v for k, v in self.per_class.items()},
        }


def coco_ap_suite(
    gts: list[GroundTruthObject],
    dets: list[Detection],
    iou_kind: str = "box",
    canvases: dict[int, tuple[int, int]] | None = None,
) -> DetectionMetrics:
    """Full COCO-style AP block for one geometry kind (box or mask)."""
    if iou_kind not in ("box", "mask"):
        raise ValueError(f"iou_kind must be box or mask, got {iou_kind!r}")
    if iou_kind == "mask" and canvases is None:
        raise ValueError("mask IoU needs per-image canvas sizes")

    groups_gt: dict[tuple[int, int], list[GroundTruthObject]] = {}
    for gt in gts:
        groups_gt.setdefault((gt.image_id, gt.category_id), []).append(gt)
    groups_det: dict[tuple[int, int], list[Detection]] = {}
    for det in dets:
        groups_det.setdefault((det.image_id, det.category_id), []).append(det)

    categories = sorted({c for _, c in groups_gt} | {c for _, c in groups_det})
    gt_categories = {c for _, c in groups_gt}
    for cat in categories:
        if cat not in gt_categories:
            warnings.warn(
                f"category {cat} has detections but no ground truth; skipped",
                ZeroGroundTruthWarning,
                stacklevel=2,
            )

    mask_cache: dict[int, np.ndarray] = {}

    def mask_of(obj) -> np.ndarray:
        key = id(obj)
        if key not in mask_cache:
            mask_cache[key] = rasterize_mask(obj.mask, canvases[obj.image_id])
        return mask_cache[key]

    iou_cache: dict[tuple[int, int], float] = {}

    def iou_of(det: Detection, gt: GroundTruthObject) -> float:
        key = (id(det), id(gt))
        if key not in iou_cache:
            if iou_kind == "box" or det.mask is None or gt.mask is None:
                iou_cache[key] = iou_box(det.bbox, gt.bbox)
            else:
                iou_cache[key] = iou_mask(mask_of(det), mask_of(gt))
        return iou_cache[key]

    def bucket_ap(bucket: str, thresholds) -> tuple[float | None, dict[int, float]]:
        lo, hi = AREA_BUCKETS[bucket]
        per_class: dict[int, float] = {}
        for cat in categories:
            n_gt_bucket = sum(
                1
                for (img, c), objs in groups_gt.items()
                if c == cat
                for o in objs
                if lo <= o.area < hi
            )
            if n_gt_bucket == 0:
                continue
            ap_values = []
            for thr in thresholds:
                flags = _match_bucket(cat, thr, lo, hi)
                ap_values.append(average_precision(flags, n_gt_bucket))
            per_class[cat] = float(np.mean(ap_values))
        if not per_class:
            return None, per_class
        return float(np.mean(list(per_class.values()))), per_class

    def _match_bucket(cat: int, thr: float, lo: float, hi: float) -> np.ndarray:
        stream: list[tuple[float, int, bool]] = []
        order = 0
        images = sorted({img for (img, c) in set(groups_gt) | set(groups_det) if c == cat})
        for img in images:
            gts_here = groups_gt.get((img, cat), [])
            dets_here = groups_det.get((img, cat), [])
            in_bucket = [lo <= g.area < hi for g in gts_here]
            det_order = sorted(range(len(dets_here)), key=lambda i: (-dets_here[i].score, i))
            taken = [False] * len(gts_here)
            for di in det_order:
                det = dets_here[di]
                best_iou, best_gi = 0.0, None
                for gi, gt in enumerate(gts_here):
                    if taken[gi] or not in_bucket[gi]:
                        continue
                    iou = iou_of(det, gt)
                    if iou >= thr and iou > best_iou:
                        best_iou, best_gi = iou, gi
                if best_gi is not None:
                    taken[best_gi] = True
                    stream.append((det.score, order, True))
                    order += 1
                    continue
                # out-of-bucket ground truth absorbs the detection silently
                absorbed = False
                for gi, gt in enumerate(gts_here):
                    if taken[gi] or in_bucket[gi]:
                        continue
                    if iou_of(det, gt) >= thr:
                        taken[gi] = True
                        absorbed = True
                        break
                if not absorbed:
                    stream.append((det.score, order, False))
                    order += 1
        stream.sort(key=lambda t: (-t[0], t[1]))
        return np.array([tp for _, _, tp in stream], dtype=bool)

    ap_mean, per_class_ap = bucket_ap("all", IOU_THRESHOLDS)
    ap50, _ = bucket_ap("all", (0.5,))
    ap75, _ = bucket_ap("all", (0.75,))
    ap_small, _ = bucket_ap("small", IOU_THRESHOLDS)
    ap_medium, _ = bucket_ap("medium", IOU_THRESHOLDS)
    ap_large, _ = bucket_ap("large", IOU_THRESHOLDS)

    return DetectionMetrics(
        ap=0.0 if ap_mean is None else ap_mean,
        ap50=0.0 if ap50 is None else ap50,
        ap75=0.0 if ap75 is None else ap75,
        ap_small=ap_small,
        ap_medium=ap_medium,
        ap_large=ap_large,
        per_class=per_class_ap,
    )
