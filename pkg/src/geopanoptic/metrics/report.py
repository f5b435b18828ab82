"""Combined metrics report with aligned-text and JSON renderings.

Values are held in [0, 1] and printed x100 with three decimals, matching the
usual presentation of these metric families.
"""

from __future__ import annotations

from dataclasses import dataclass

from .detection import DetectionMetrics
from .panoptic import PanopticMetrics
from .semantic import SemanticMetrics


def fmt(value: float | None) -> str:
    return "-" if value is None else f"{value * 100:.3f}"


@dataclass
class MetricsReport:
    semantic: SemanticMetrics | None = None
    detection: dict[str, DetectionMetrics] | None = None  # keys: box, mask
    panoptic: PanopticMetrics | None = None
    class_names: dict[int, str] | None = None

    def _name(self, label: int) -> str:
        if self.class_names and label in self.class_names:
            return self.class_names[label]
        return f"class {label}"

    def to_json_dict(self) -> dict:
        out: dict = {}
        if self.semantic is not None:
            out["semantic"] = self.semantic.to_json_dict()
        if self.detection is not None:
            out["detection"] = {kind: m.to_json_dict() for kind, m in self.detection.items()}
        if self.panoptic is not None:
            out["panoptic"] = self.panoptic.to_json_dict()
        return out

    def to_text(self) -> str:
        blocks = []
        if self.semantic is not None:
            blocks.append(self._semantic_text())
        if self.detection is not None:
            blocks.append(self._detection_text())
        if self.panoptic is not None:
            blocks.append(self._panoptic_text())
        return "\n".join(blocks)

    def _semantic_text(self) -> str:
        s = self.semantic
        lines = ["Semantic segmentation"]
        lines.append(f"{'mIoU':>8s} {'fwIoU':>8s} {'mAcc':>8s} {'pAcc':>8s}")
        lines.append(f"{fmt(s.miou):>8s} {fmt(s.fwiou):>8s} {fmt(s.macc):>8s} {fmt(s.pacc):>8s}")
        if s.per_class:
            lines.append("")
            width = max(len(self._name(lbl)) for lbl in s.per_class)
            width = max(width, len("Category"))
            lines.append(f"{'Category':<{width}s} {'IoU':>8s} {'Acc':>8s}")
            for lbl in sorted(s.per_class):
                iou, acc = s.per_class[lbl]
                lines.append(f"{self._name(lbl):<{width}s} {fmt(iou):>8s} {fmt(acc):>8s}")
        return "\n".join(lines) + "\n"

    def _detection_text(self) -> str:
        lines = ["Instance segmentation (COCO AP)"]
        lines.append(
            f"{'Type':<5s} {'AP':>8s} {'AP50':>8s} {'AP75':>8s} {'APS':>8s} {'APM':>8s} {'APL':>8s}"
        )
        for kind in ("box", "mask"):
            if kind not in self.detection:
                continue
            m = self.detection[kind]
            lines.append(
                f"{kind.capitalize():<5s} {fmt(m.ap):>8s} {fmt(m.ap50):>8s} {fmt(m.ap75):>8s} "
                f"{fmt(m.ap_small):>8s} {fmt(m.ap_medium):>8s} {fmt(m.ap_large):>8s}"
            )
        per_class = {kind: m.per_class for kind, m in self.detection.items() if m.per_class}
        labels = sorted({lbl for pc in per_class.values() for lbl in pc})
        if labels:
            lines.append("")
            width = max(max(len(self._name(lbl)) for lbl in labels), len("Category"))
            cols = [k for k in ("box", "mask") if k in per_class]
            header = f"{'Category':<{width}s}" + "".join(f" {k.capitalize() + ' AP':>9s}" for k in cols)
            lines.append(header)
            for lbl in labels:
                row = f"{self._name(lbl):<{width}s}"
                for k in cols:
                    row += f" {fmt(per_class[k].get(lbl)):>9s}"
                lines.append(row)
        return "\n".join(lines) + "\n"

    def _panoptic_text(self) -> str:
        p = self.panoptic
        lines = ["Panoptic segmentation"]
        lines.append(f"{'Type':<7s} {'PQ':>8s} {'SQ':>8s} {'RQ':>8s}")
        for name, title in (("all", "All"), ("things", "Things"), ("stuff", "Stuff")):
            pq, sq, rq = p.groups[name]
            lines.append(f"{title:<7s} {fmt(pq):>8s} {fmt(sq):>8s} {fmt(rq):>8s}")
        if p.per_class:
            lines.append("")
            width = max(max(len(self._name(lbl)) for lbl in p.per_class), len("Category"))
            lines.append(f"{'Category':<{width}s} {'PQ':>8s} {'SQ':>8s} {'RQ':>8s}")
            for lbl in sorted(p.per_class):
                c = p.per_class[lbl]
                lines.append(f"{self._name(lbl):<{width}s} {fmt(c.pq):>8s} {fmt(c.sq):>8s} {fmt(c.rq):>8s}")
        return "\n".join(lines) + "\n"
