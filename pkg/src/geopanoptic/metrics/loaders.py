"""Load ground truth and prediction files into metric inputs and run the stacks.

Ground truth follows the dataset layout written by this package; predictions
arrive as COCO detection results (a JSON list, masks as polygons or
uncompressed column-major RLE) or COCO panoptic results (JSON plus id-encoded
PNGs). Semantic predictions are a directory of label PNGs named like the
ground-truth ones.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..dataset_writer import load_id_map, load_json
from ..errors import MissingFileError
from ..geoformats.png import decode_png
from .detection import Detection, GroundTruthObject, coco_ap_suite
from .panoptic import PanopticMatchSet, pq_match, pq_metrics
from .report import MetricsReport
from .semantic import ConfusionMatrix, semantic_confusion, semantic_metrics


def _read_label_png(path: Path) -> np.ndarray:
    if not path.exists():
        raise MissingFileError(f"{path} does not exist")
    arr = decode_png(path.read_bytes())
    if arr.shape[2] != 1:
        raise ValueError(f"{path}: semantic images must be single-channel")
    return arr[:, :, 0]


def evaluate_semantic(
    gt_dir: str | Path,
    pred_dir: str | Path,
    class_names: dict[int, str] | None = None,
    merge_map: dict[int, int] | None = None,
    ignore_label: int = 0,
) -> MetricsReport:
    """Compare every ground-truth label PNG with its same-named prediction."""
    gt_dir, pred_dir = Path(gt_dir), Path(pred_dir)
    names = sorted(p.name for p in gt_dir.glob("*.png"))
    if not names:
        raise MissingFileError(f"no ground-truth label images under {gt_dir}")
    matrices = []
    for name in names:
        gt = _read_label_png(gt_dir / name)
        pred = _read_label_png(pred_dir / name)
        matrices.append(semantic_confusion(gt, pred, ignore_label=ignore_label, merge_map=merge_map))
    cm = ConfusionMatrix.merge(matrices)
    return MetricsReport(semantic=semantic_metrics(cm), class_names=class_names)


def load_instance_ground_truth(
    instances_json: str | Path,
) -> tuple[list[GroundTruthObject], dict[int, tuple[int, int]], dict[int, str]]:
    """Instance document -> GT objects, per-image canvases, class names."""
    doc = load_json(instances_json)
    canvases = {img["id"]: (img["height"], img["width"]) for img in doc["images"]}
    names = {cat["id"]: cat["name"] for cat in doc["categories"]}
    gts = [
        GroundTruthObject(
            image_id=ann["image_id"],
            category_id=ann["category_id"],
            bbox=tuple(float(v) for v in ann["bbox"]),
            area=float(ann["area"]),
            mask=ann.get("segmentation"),
        )
        for ann in doc["annotations"]
    ]
    return gts, canvases, names


def load_detections(path: str | Path) -> list[Detection]:
    """COCO detection results: a JSON list, or a dict with an annotations list."""
    obj = load_json(path)
    items = obj["annotations"] if isinstance(obj, dict) else obj
    dets = []
    for i, item in enumerate(items):
        try:
            dets.append(
                Detection(
                    image_id=int(item["image_id"]),
                    category_id=int(item["category_id"]),
                    score=float(item["score"]),
                    bbox=tuple(float(v) for v in item["bbox"]),
                    mask=item.get("segmentation"),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}: detection record {i}: {exc}") from exc
    return dets


def evaluate_instance(
    instances_json: str | Path, detections_path: str | Path
) -> MetricsReport:
    """Box AP always; mask AP when any detection carries a segmentation."""
    gts, canvases, names = load_instance_ground_truth(instances_json)
    dets = load_detections(detections_path)
    result = {"box": coco_ap_suite(gts, dets, "box", canvases)}
    if any(d.mask is not None for d in dets):
        result["mask"] = coco_ap_suite(gts, dets, "mask", canvases)
    return MetricsReport(detection=result, class_names=names)


def evaluate_panoptic(
    gt_json: str | Path,
    gt_png_dir: str | Path,
    pred_json: str | Path,
    pred_png_dir: str | Path,
    registry,
) -> MetricsReport:
    """Accumulate per-image segment matches over a split, then reduce."""
    gt_doc = load_json(gt_json)
    pred_doc = load_json(pred_json)
    names = {cat["id"]: cat["name"] for cat in gt_doc.get("categories", [])}
    pred_by_image = {ann["image_id"]: ann for ann in pred_doc["annotations"]}
    matches = PanopticMatchSet()
    for ann in gt_doc["annotations"]:
        image_id = ann["image_id"]
        if image_id not in pred_by_image:
            raise MissingFileError(f"prediction for image {image_id} missing from {pred_json}")
        pred_ann = pred_by_image[image_id]
        gt_map = load_id_map(Path(gt_png_dir) / ann["file_name"])
        pred_map = load_id_map(Path(pred_png_dir) / pred_ann["file_name"])
        matches.add(
            pq_match(gt_map, ann["segments_info"], pred_map, pred_ann["segments_info"], image_id)
        )
    return MetricsReport(panoptic=pq_metrics(matches, registry), class_names=names)


def registry_from_panoptic_document(doc_path: str | Path):
    """Rebuild a category registry from a panoptic document's categories."""
    from ..annotator import CategoryEntry, CategoryRegistry

    doc = load_json(doc_path)
    entries = tuple(
        CategoryEntry(int(c["id"]), str(c["name"]), bool(c["isthing"])) for c in doc["categories"]
    )
    return CategoryRegistry(entries=entries)
