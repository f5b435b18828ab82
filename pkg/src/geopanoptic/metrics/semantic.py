"""Pixel-wise confusion matrix and the semantic metric family (pAcc/mAcc/mIoU/fwIoU)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatchError


@dataclass(frozen=True)
class ConfusionMatrix:
    """Pixel tallies, rows = ground truth, columns = prediction.

    Pixels whose ground truth equals ``ignore_label`` are never tallied; the
    ignore label can still appear as a column when the prediction emits it,
    so per-class false negatives stay accounted for.
    """

    labels: tuple[int, ...]
    counts: np.ndarray
    ignored_pixels: int = 0
    ignore_label: int = 0

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64, copy=True)
        if counts.shape != (len(self.labels), len(self.labels)):
            raise ValueError(f"counts shape {counts.shape} != labels {len(self.labels)}")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "labels", tuple(int(v) for v in self.labels))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @classmethod
    def merge(cls, matrices: list["ConfusionMatrix"]) -> "ConfusionMatrix":
        """Sum matrices over a label union; accumulation is order-independent."""
        if not matrices:
            return cls(labels=(), counts=np.zeros((0, 0), dtype=np.int64))
        ignore = matrices[0].ignore_label
        labels = sorted({lbl for m in matrices for lbl in m.labels})
        index = {lbl: i for i, lbl in enumerate(labels)}
        counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
        ignored = 0
        for m in matrices:
            if m.ignore_label != ignore:
                raise ValueError("cannot merge matrices with different ignore labels")
            idx = np.array([index[lbl] for lbl in m.labels], dtype=np.int64)
            counts[np.ix_(idx, idx)] += m.counts
            ignored += m.ignored_pixels
        return cls(labels=tuple(labels), counts=counts, ignored_pixels=ignored, ignore_label=ignore)


def _as_plane(x) -> np.ndarray:
    if hasattr(x, "plane"):
        return x.plane(0)
    arr = np.asarray(x)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    return arr


def semantic_confusion(gt, pred, ignore_label: int = 0, merge_map: dict[int, int] | None = None) -> ConfusionMatrix:
    """Tally every pixel whose ground truth is not the ignore label.

    ``merge_map`` remaps labels on both sides before tallying, which is how
    the all-things-as-one-class analysis is produced.
    """
    gt = _as_plane(gt).astype(np.int64)
    pred = _as_plane(pred).astype(np.int64)
    if gt.shape != pred.shape:
        raise DimensionMismatchError(f"ground truth {gt.shape} vs prediction {pred.shape}")
    if merge_map:
        gt = _remap(gt, merge_map)
        pred = _remap(pred, merge_map)
    valid = gt != ignore_label
    ignored = int((~valid).sum())
    gt_v = gt[valid]
    pred_v = pred[valid]
    labels = tuple(sorted(set(np.unique(gt_v).tolist()) | set(np.unique(pred_v).tolist())))
    if not labels:
        return ConfusionMatrix(labels=(), counts=np.zeros((0, 0), dtype=np.int64),
                               ignored_pixels=ignored, ignore_label=ignore_label)
    n = len(labels)
    label_arr = np.array(labels, dtype=np.int64)
    gt_idx = np.searchsorted(label_arr, gt_v)
    pred_idx = np.searchsorted(label_arr, pred_v)
    counts = np.bincount(gt_idx * n + pred_idx, minlength=n * n).reshape(n, n)
    return ConfusionMatrix(labels=labels, counts=counts, ignored_pixels=ignored, ignore_label=ignore_label)


def _remap(arr: np.ndarray, mapping: dict[int, int]) -> np.ndarray:
    out = arr.copy()
    for src, dst in mapping.items():
        out[arr == src] = dst
    return out


@dataclass(frozen=True)
class SemanticMetrics:
    """All values in [0, 1]; per_class maps label -> (iou, acc-or-None)."""

    pacc: float
    macc: float
    miou: float
    fwiou: float
    fw_macc: float
    per_class: dict[int, tuple[float, float | None]]

    def to_json_dict(self) -> dict:
        return {
            "pAcc": self.pacc,
            "mAcc": self.macc,
            "mIoU": self.miou,
            "fwIoU": self.fwiou,
            "fwAcc": self.fw_macc,
            "per_class": {
                str(lbl): {"IoU": iou, "Acc": acc} for lbl, (iou, acc) in self.per_class.items()
            },
        }


def semantic_metrics(cm: ConfusionMatrix) -> SemanticMetrics:
    """Derive the metric family from a confusion matrix.

    Classes enter the IoU mean when they occur in ground truth or prediction;
    classes absent from both are excluded, as is the ignore label itself.
    The accuracy mean runs over classes with ground-truth pixels only.
    """
    if cm.total == 0:
        return SemanticMetrics(0.0, 0.0, 0.0, 0.0, 0.0, {})
    diag = cm.counts.diagonal().astype(np.float64)
    rows = cm.counts.sum(axis=1).astype(np.float64)
    cols = cm.counts.sum(axis=0).astype(np.float64)
    total = float(cm.total)

    per_class: dict[int, tuple[float, float | None]] = {}
    ious, accs, freqs, fw_accs = [], [], [], []
    for i, lbl in enumerate(cm.labels):
        if lbl == cm.ignore_label:
            continue
        union = rows[i] + cols[i] - diag[i]
        if union <= 0:
            continue
        iou = float(diag[i] / union)
        acc = float(diag[i] / rows[i]) if rows[i] > 0 else None
        per_class[lbl] = (iou, acc)
        ious.append(iou)
        freqs.append(rows[i] / total)
        if acc is not None:
            accs.append(acc)
            fw_accs.append((rows[i] / total) * acc)
    pacc = float(diag.sum() / total)
    miou = float(np.mean(ious)) if ious else 0.0
    macc = float(np.mean(accs)) if accs else 0.0
    fwiou = float(np.sum([f * i for f, i in zip(freqs, ious)]))
    fw_macc = float(np.sum(fw_accs))
    return SemanticMetrics(pacc=pacc, macc=macc, miou=miou, fwiou=fwiou, fw_macc=fw_macc, per_class=per_class)
