"""Assemble annotated tiles into the on-disk COCO dataset, deterministically.

Layout under the output root:

    annotations/{instances,panoptic,semantic}_{train,valid,test}.json
    {train,valid,test}/images/{set}_{id:06}.tif
    {train,valid,test}/panoptic/{set}_{id:06}.png
    {train,valid,test}/semantic/{set}_{id:06}.png
    manifest.json

which is one annotations folder plus three folders per split: ten in all.
Identical inputs produce byte-identical trees regardless of worker count.
"""

from __future__ import annotations

import hashlib
import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .annotator import CategoryRegistry, TileAnnotation, id_map_to_rgb, rgb_to_id_map
from .errors import (
    EmptyDatasetWarning,
    LabelOverflowError,
    MalformedSegmentsError,
    MissingFileError,
    NonEmptyTargetError,
)
from .geoformats import Raster, encode_png, encode_tiff
from .geoformats.png import decode_png
from .tiler import TileWindow

SET_NAMES = ("train", "valid", "test")
SUBFOLDERS = ("images", "panoptic", "semantic")


@dataclass
class TilePackage:
    """Everything produced for one accepted point: pixels plus annotation."""

    image_id: int
    original: Raster
    semantic: np.ndarray
    annotation: TileAnnotation
    window: TileWindow


@dataclass
class DatasetBuild:
    registry: CategoryRegistry
    sets: dict[str, list[TilePackage]]
    rejected: list[dict] = field(default_factory=list)


def file_stem(role: str, image_id: int) -> str:
    return f"{role}_{image_id:06d}"


def dump_json(obj) -> bytes:
    """Canonical JSON bytes: sorted keys, no insignificant whitespace."""
    return (json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n").encode("utf-8")


def _image_entry(role: str, tile: TilePackage, ext: str) -> dict:
    return {
        "id": tile.image_id,
        "file_name": f"{file_stem(role, tile.image_id)}.{ext}",
        "width": tile.original.width,
        "height": tile.original.height,
    }


def _flatten_ring(ring) -> list[float]:
    return [float(v) for xy in ring for v in xy]


def build_instance_document(tiles: list[TilePackage], registry: CategoryRegistry, role: str) -> dict:
    """COCO instance JSON: thing segments only, annotation ids globally dense.

    Annotation ids follow (image id, per-image segment order); a tile with
    only stuff keeps its image entry and contributes no annotations.
    """
    images = [_image_entry(role, t, "tif") for t in tiles]
    annotations = []
    next_id = 1
    for tile in tiles:
        for seg in tile.annotation.segments:
            if not registry.is_thing(seg.category):
                continue
            annotations.append(
                {
                    "id": next_id,
                    "image_id": tile.image_id,
                    "category_id": seg.category,
                    "segmentation": [_flatten_ring(r) for r in seg.polygons],
                    "area": seg.area,
                    "bbox": [float(v) for v in seg.bbox],
                    "iscrowd": 0,
                }
            )
            next_id += 1
    if tiles and not annotations:
        warnings.warn(f"{role}: instance document has zero annotations", EmptyDatasetWarning, stacklevel=2)
    categories = [{"id": lbl, "name": registry.name(lbl)} for lbl in registry.thing_labels]
    return {"images": images, "annotations": annotations, "categories": categories}


def build_panoptic_outputs(
    tiles: list[TilePackage], registry: CategoryRegistry, role: str
) -> tuple[dict, list[tuple[str, np.ndarray]]]:
    """COCO panoptic JSON plus one base-256 id image per tile (void = 0,0,0)."""
    images = [_image_entry(role, t, "tif") for t in tiles]
    annotations = []
    pngs = []
    for tile in tiles:
        name = f"{file_stem(role, tile.image_id)}.png"
        annotations.append(
            {
                "image_id": tile.image_id,
                "file_name": name,
                "segments_info": [
                    {
                        "id": seg.segment_id,
                        "category_id": seg.category,
                        "area": seg.area,
                        "bbox": [int(v) for v in seg.bbox],
                        "iscrowd": 0,
                    }
                    for seg in tile.annotation.segments
                ],
            }
        )
        pngs.append((name, id_map_to_rgb(tile.annotation.id_map)))
    categories = [
        {"id": e.label, "name": e.name, "isthing": 1 if e.isthing else 0} for e in registry.entries
    ]
    return {"images": images, "annotations": annotations, "categories": categories}, pngs


def build_semantic_outputs(
    tiles: list[TilePackage], registry: CategoryRegistry, role: str, merged_things: bool = False
) -> list[tuple[str, np.ndarray]]:
    """Per-tile single-channel label images, optionally with things collapsed.

    The merged variant maps every thing label to one class above the highest
    stuff label, matching what a combined-task model predicts for things.
    """
    out = []
    merged_label = registry.merged_things_label
    if merged_things and merged_label > 255:
        raise LabelOverflowError(f"merged things label {merged_label} exceeds 8 bits")
    thing_set = set(registry.thing_labels)
    for tile in tiles:
        plane = np.asarray(tile.semantic)
        if plane.max(initial=0) > 255:
            raise LabelOverflowError(f"semantic label {int(plane.max())} exceeds 8 bits")
        plane = plane.astype(np.uint8)
        if merged_things:
            merged = plane.copy()
            for lbl in thing_set:
                merged[plane == lbl] = merged_label
            plane = merged
        out.append((f"{file_stem(role, tile.image_id)}.png", plane))
    return out


def build_semantic_index(tiles: list[TilePackage], registry: CategoryRegistry, role: str) -> dict:
    images = [_image_entry(role, t, "png") for t in tiles]
    return {"images": images, "categories": [
        {"id": e.label, "name": e.name, "isthing": 1 if e.isthing else 0} for e in registry.entries
    ]}


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def write_dataset(
    root: str | Path,
    build: DatasetBuild,
    *,
    force: bool = False,
    workers: int = 1,
    merged_semantic: bool = False,
) -> dict:
    """Write the full dataset tree and return its manifest.

    Refuses a non-empty target unless forced; forcing removes the previously
    produced layout entries so stale files cannot survive. Encoding fans out
    over a worker pool, but file contents and the manifest are independent of
    the worker count.
    """
    root = Path(root)
    produced = ["annotations", "manifest.json", *SET_NAMES]
    if root.exists():
        existing = [p for p in root.iterdir()]
        if existing and not force:
            raise NonEmptyTargetError(f"{root} is not empty; pass force to overwrite")
        for p in existing:
            if p.name in produced:
                _remove_tree(p)
    root.mkdir(parents=True, exist_ok=True)
    (root / "annotations").mkdir()
    for role in SET_NAMES:
        for sub in SUBFOLDERS:
            (root / role / sub).mkdir(parents=True)
        if merged_semantic:
            (root / role / "semantic_merged").mkdir()

    jobs: list[tuple[str, bytes | None, object]] = []  # (relpath, bytes or None, lazy payload)

    def encode_job(payload):
        kind, data = payload
        if kind == "tif":
            return encode_tiff(data)
        return encode_png(data)

    registry = build.registry
    documents: dict[str, dict] = {}
    for role in SET_NAMES:
        tiles = build.sets.get(role, [])
        documents[f"annotations/instances_{role}.json"] = build_instance_document(tiles, registry, role)
        pan_doc, pan_pngs = build_panoptic_outputs(tiles, registry, role)
        documents[f"annotations/panoptic_{role}.json"] = pan_doc
        documents[f"annotations/semantic_{role}.json"] = build_semantic_index(tiles, registry, role)
        for tile in tiles:
            jobs.append((f"{role}/images/{file_stem(role, tile.image_id)}.tif", ("tif", tile.original)))
        for name, rgb in pan_pngs:
            jobs.append((f"{role}/panoptic/{name}", ("png", rgb)))
        for name, plane in build_semantic_outputs(tiles, registry, role):
            jobs.append((f"{role}/semantic/{name}", ("png", plane)))
        if merged_semantic:
            for name, plane in build_semantic_outputs(tiles, registry, role, merged_things=True):
                jobs.append((f"{role}/semantic_merged/{name}", ("png", plane)))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        encoded = list(pool.map(encode_job, (payload for _, payload in jobs)))

    files: dict[str, str] = {}
    for (relpath, _), data in zip(jobs, encoded):
        _atomic_write(root / relpath, data)
        files[relpath] = hashlib.sha256(data).hexdigest()
    for relpath, doc in documents.items():
        data = dump_json(doc)
        _atomic_write(root / relpath, data)
        files[relpath] = hashlib.sha256(data).hexdigest()

    manifest = {
        "files": dict(sorted(files.items())),
        "windows": {
            role: [
                {
                    "image_id": t.image_id,
                    "point_index": t.window.source_point_index,
                    "col0": t.window.col0,
                    "row0": t.window.row0,
                    "size": t.window.size,
                }
                for t in build.sets.get(role, [])
            ]
            for role in SET_NAMES
        },
        "rejected": build.rejected,
        "summary": {
            role: {
                "images": len(build.sets.get(role, [])),
                "instances": len(documents[f"annotations/instances_{role}.json"]["annotations"]),
                "segments": sum(
                    len(t.annotation.segments) for t in build.sets.get(role, [])
                ),
            }
            for role in SET_NAMES
        },
    }
    _atomic_write(root / "manifest.json", dump_json(manifest))
    return manifest


def _remove_tree(path: Path) -> None:
    if path.is_file() or path.is_symlink():
        path.unlink()
        return
    for child in path.iterdir():
        _remove_tree(child)
    path.rmdir()


# --- reading and validation ---------------------------------------------------


def load_json(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"{path} does not exist")
    return json.loads(path.read_text(encoding="utf-8"))


def load_id_map(png_path: str | Path) -> np.ndarray:
    """Panoptic PNG -> segment-id map."""
    png_path = Path(png_path)
    if not png_path.exists():
        raise MissingFileError(f"{png_path} does not exist")
    rgb = decode_png(png_path.read_bytes())
    if rgb.shape[2] != 3:
        raise MalformedSegmentsError(f"{png_path}: panoptic image must have 3 channels")
    return rgb_to_id_map(rgb)


def validate_instance_document(doc: dict) -> list[str]:
    """Schema invariants of an instance document; returns violations."""
    violations = []
    image_ids = {img["id"] for img in doc.get("images", [])}
    category_ids = {cat["id"] for cat in doc.get("categories", [])}
    expected = 1
    for ann in doc.get("annotations", []):
        ident = f"annotation {ann.get('id')}"
        if ann.get("id") != expected:
            violations.append(f"{ident}: id not dense/increasing (expected {expected})")
        expected += 1
        if ann.get("image_id") not in image_ids:
            violations.append(f"{ident}: image_id {ann.get('image_id')} not in images")
        if ann.get("category_id") not in category_ids:
            violations.append(f"{ident}: category_id {ann.get('category_id')} not in categories")
        if ann.get("iscrowd") != 0:
            violations.append(f"{ident}: iscrowd must be 0")
        bbox = ann.get("bbox", [])
        if len(bbox) != 4 or bbox[2] < 0 or bbox[3] < 0:
            violations.append(f"{ident}: malformed bbox {bbox}")
        if ann.get("area", 0) <= 0:
            violations.append(f"{ident}: non-positive area")
    return violations


def validate_panoptic_document(doc: dict, png_dir: str | Path) -> list[str]:
    """Panoptic document invariants, cross-checked against the id images."""
    violations = []
    png_dir = Path(png_dir)
    image_ids = {img["id"] for img in doc.get("images", [])}
    categories = {cat["id"]: cat for cat in doc.get("categories", [])}
    for cat in doc.get("categories", []):
        if cat.get("isthing") not in (0, 1):
            violations.append(f"category {cat.get('id')}: isthing must be 0 or 1")
    for ann in doc.get("annotations", []):
        name = ann.get("file_name", "?")
        if ann.get("image_id") not in image_ids:
            violations.append(f"{name}: image_id {ann.get('image_id')} not in images")
        try:
            id_map = load_id_map(png_dir / name)
        except MissingFileError:
            violations.append(f"{name}: panoptic image missing")
            continue
        info = ann.get("segments_info", [])
        info_ids = [seg["id"] for seg in info]
        if len(set(info_ids)) != len(info_ids):
            violations.append(f"{name}: duplicate segment ids in segments_info")
        png_ids = {int(v) for v in np.unique(id_map) if v != 0}
        if png_ids != set(info_ids):
            violations.append(
                f"{name}: segment ids differ between image and segments_info "
                f"(image-only {sorted(png_ids - set(info_ids))}, "
                f"info-only {sorted(set(info_ids) - png_ids)})"
            )
        for seg in info:
            sid = seg["id"]
            if seg.get("iscrowd") != 0:
                violations.append(f"{name} segment {sid}: iscrowd must be 0")
            if seg.get("category_id") not in categories:
                violations.append(f"{name} segment {sid}: unknown category {seg.get('category_id')}")
            if sid not in png_ids:
                continue
            mask = id_map == sid
            area = int(mask.sum())
            if area != seg.get("area"):
                violations.append(f"{name} segment {sid}: area {seg.get('area')} != {area} pixels")
            rows, cols = np.nonzero(mask)
            tight = [int(cols.min()), int(rows.min()),
                     int(cols.max() - cols.min() + 1), int(rows.max() - rows.min() + 1)]
            if list(seg.get("bbox", [])) != tight:
                violations.append(f"{name} segment {sid}: bbox {seg.get('bbox')} != tight {tight}")
    return violations


def validate_dataset_tree(root: str | Path) -> list[str]:
    """Validate every document in a written dataset against its images."""
    root = Path(root)
    violations = []
    manifest = load_json(root / "manifest.json")
    for relpath, digest in manifest.get("files", {}).items():
        target = root / relpath
        if not target.exists():
            raise MissingFileError(f"{target} listed in manifest but missing")
        actual = hashlib.sha256(target.read_bytes()).hexdigest()
        if actual != digest:
            violations.append(f"{relpath}: content digest mismatch")
    for role in SET_NAMES:
        inst = load_json(root / "annotations" / f"instances_{role}.json")
        violations += [f"instances_{role}: {v}" for v in validate_instance_document(inst)]
        pan = load_json(root / "annotations" / f"panoptic_{role}.json")
        violations += [f"panoptic_{role}: {v}" for v in validate_panoptic_document(pan, root / role / "panoptic")]
    return violations
