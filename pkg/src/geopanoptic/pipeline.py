"""End-to-end conversion: rasters + point files -> annotated dataset on disk."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .annotator import CategoryRegistry, annotate_tile
from .dataset_writer import SET_NAMES, DatasetBuild, TilePackage, write_dataset
from .errors import CrsMismatchWarning, DimensionMismatchError, OutOfBoundsError
from .geoformats import GeoTransform, Raster, read_point_shapefile, read_raster
from .tiler import OverlapReport, audit_overlaps, extract_tile, tile_window


@dataclass
class JobConfig:
    """One conversion run: input paths, split points, tiling, and output knobs."""

    original_image: Path
    semantic_image: Path
    sequential_image: Path
    points: dict[str, Path]
    registry: CategoryRegistry
    output: Path
    tile_size: int = 512
    channels: list[int] | None = None
    force: bool = False
    fail_on_overlap: bool = False
    merged_semantic: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.tile_size < 2 or self.tile_size % 2 != 0:
            raise ValueError(f"tile size must be even and >= 2, got {self.tile_size}")
        unknown = set(self.points) - set(SET_NAMES)
        if unknown:
            raise ValueError(f"unknown point-set roles: {sorted(unknown)}")


@dataclass
class ConvertResult:
    manifest: dict
    overlap: OverlapReport
    rejected: list[dict] = field(default_factory=list)


def _check_coregistered(original: Raster, semantic: Raster, sequential: Raster) -> GeoTransform:
    dims = {(r.width, r.height) for r in (original, semantic, sequential)}
    if len(dims) != 1:
        raise DimensionMismatchError(f"input rasters differ in size: {sorted(dims)}")
    crs_codes = {r.crs_epsg for r in (original, semantic, sequential) if r.crs_epsg is not None}
    if len(crs_codes) > 1:
        warnings.warn(
            f"input rasters declare different coordinate systems {sorted(crs_codes)}; "
            "coordinates are used as-is",
            CrsMismatchWarning,
            stacklevel=2,
        )
    gts = [r.geotransform for r in (original, semantic, sequential)]
    present = [g for g in gts if g is not None]
    if not present:
        # ungeoreferenced inputs: world coordinates are pixel coordinates
        return GeoTransform(0.0, 0.0, 1.0, 1.0)
    if len(present) != 3:
        raise DimensionMismatchError("some input rasters are georeferenced and some are not")
    ref = present[0]
    for g in present[1:]:
        if not ref.approx_equal(g, rel_tol=1e-6):
            raise DimensionMismatchError(f"input rasters are not co-registered: {ref} vs {g}")
    return ref


def run_convert(config: JobConfig) -> ConvertResult:
    """Tile, annotate, audit, and write a dataset per the job configuration.

    Out-of-bounds points are rejected and reported, never padded. The overlap
    audit covers all accepted windows; with fail_on_overlap set, a violation
    aborts before anything is written.
    """
    original = read_raster(config.original_image)
    semantic = read_raster(config.semantic_image)
    sequential = read_raster(config.sequential_image)
    if semantic.channels != 1 or sequential.channels != 1:
        raise DimensionMismatchError("semantic and sequential rasters must be single-channel")
    gt = _check_coregistered(original, semantic, sequential)
    if config.channels:
        original = original.select_channels(config.channels)

    dims = (original.width, original.height)
    windows = []
    rejected: list[dict] = []
    for role in SET_NAMES:
        if role not in config.points:
            continue
        point_set = read_point_shapefile(config.points[role], role=role)
        for idx, point in enumerate(point_set.points):
            try:
                windows.append(
                    tile_window(gt, dims, point, config.tile_size, point_index=idx, role=role)
                )
            except OutOfBoundsError as exc:
                rejected.append({"role": role, "point_index": idx, "reason": str(exc)})

    overlap = audit_overlaps(windows)
    if config.fail_on_overlap and overlap.violations:
        return ConvertResult(manifest={}, overlap=overlap, rejected=rejected)

    registry = config.registry

    def build_tile(args) -> tuple[str, TilePackage]:
        window, image_id = args
        orig_tile = extract_tile(original, window)
        sem_tile = extract_tile(semantic, window)
        seq_tile = extract_tile(sequential, window)
        annotation = annotate_tile(seq_tile.plane(0), sem_tile.plane(0), registry)
        return window.role, TilePackage(
            image_id=image_id,
            original=orig_tile,
            semantic=sem_tile.plane(0),
            annotation=annotation,
            window=window,
        )

    jobs = []
    counters = {role: 0 for role in SET_NAMES}
    for window in windows:  # windows are in role-then-point order
        counters[window.role] += 1
        jobs.append((window, counters[window.role]))

    with ThreadPoolExecutor(max_workers=max(1, config.workers)) as pool:
        packaged = list(pool.map(build_tile, jobs))

    sets: dict[str, list[TilePackage]] = {role: [] for role in SET_NAMES}
    for role, package in packaged:  # map() preserves submission order
        sets[role].append(package)

    build = DatasetBuild(registry=registry, sets=sets, rejected=rejected)
    manifest = write_dataset(
        config.output,
        build,
        force=config.force,
        workers=config.workers,
        merged_semantic=config.merged_semantic,
    )
    return ConvertResult(manifest=manifest, overlap=overlap, rejected=rejected)


def dataset_stats(root: str | Path) -> dict:
    """Dataset composition: per-split sizes and per-category polygon/pixel counts."""
    from .dataset_writer import load_json

    root = Path(root)
    per_set = {}
    categories: dict[int, dict] = {}
    cat_names: dict[int, str] = {}
    cat_isthing: dict[int, bool] = {}
    for role in SET_NAMES:
        inst = load_json(root / "annotations" / f"instances_{role}.json")
        pan = load_json(root / "annotations" / f"panoptic_{role}.json")
        per_set[role] = {
            "images": len(inst["images"]),
            "instances": len(inst["annotations"]),
        }
        for cat in pan["categories"]:
            cat_names[cat["id"]] = cat["name"]
            cat_isthing[cat["id"]] = bool(cat["isthing"])
        for ann in inst["annotations"]:
            entry = categories.setdefault(ann["category_id"], {"polygons": 0, "pixels": 0})
            entry["polygons"] += 1
        for ann in pan["annotations"]:
            for seg in ann["segments_info"]:
                entry = categories.setdefault(seg["category_id"], {"polygons": 0, "pixels": 0})
                entry["pixels"] += seg["area"]
    return {
        "per_set": per_set,
        "categories": {
            str(lbl): {
                "name": cat_names.get(lbl, f"class {lbl}"),
                "isthing": cat_isthing.get(lbl, False),
                "polygons": categories[lbl]["polygons"] if cat_isthing.get(lbl, False) else None,
                "pixels": categories[lbl]["pixels"],
            }
            for lbl in sorted(categories)
        },
    }
