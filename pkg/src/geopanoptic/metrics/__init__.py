"""Evaluation stack: semantic confusion metrics, COCO-style AP, and PQ/SQ/RQ."""

from .detection import (
    AREA_BUCKETS,
    IOU_THRESHOLDS,
    Detection,
    DetectionMetrics,
    GroundTruthObject,
    average_precision,
    coco_ap_suite,
    iou_box,
    iou_mask,
    match_detections,
    rasterize_mask,
)
from .panoptic import ClassPQ, PanopticMatchSet, PanopticMetrics, SegmentRef, pq_match, pq_metrics
from .report import MetricsReport
from .semantic import ConfusionMatrix, SemanticMetrics, semantic_confusion, semantic_metrics

__all__ = [
    "AREA_BUCKETS",
    "IOU_THRESHOLDS",
    "ClassPQ",
    "ConfusionMatrix",
    "Detection",
    "DetectionMetrics",
    "GroundTruthObject",
    "MetricsReport",
    "PanopticMatchSet",
    "PanopticMetrics",
    "SegmentRef",
    "SemanticMetrics",
    "average_precision",
    "coco_ap_suite",
    "iou_box",
    "iou_mask",
    "match_detections",
    "pq_match",
    "pq_metrics",
    "rasterize_mask",
    "semantic_confusion",
    "semantic_metrics",
]
