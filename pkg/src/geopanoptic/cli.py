"""Command-line interface: convert, validate, evaluate, stats.

Progress and warnings go to stderr; data and reports go to stdout or files.
Exit codes: 0 success, 1 validation/policy failure, 2 input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .annotator import CategoryRegistry
from .dataset_writer import SET_NAMES, dump_json, load_json, validate_dataset_tree
from .errors import GeoPanopticError
from .metrics.loaders import (
    evaluate_instance,
    evaluate_panoptic,
    evaluate_semantic,
    registry_from_panoptic_document,
)
from .pipeline import JobConfig, dataset_stats, run_convert
from .tiler import TileWindow, audit_overlaps

EXIT_OK = 0
EXIT_POLICY = 1
EXIT_INPUT = 2


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _load_registry(spec, base: Path) -> CategoryRegistry:
    if isinstance(spec, (str, Path)):
        path = Path(spec)
        if not path.is_absolute():
            path = base / path
        return CategoryRegistry.from_json_obj(load_json(path))
    return CategoryRegistry.from_json_obj(spec)


def _job_config(args) -> JobConfig:
    cfg_path = Path(args.config)
    cfg = load_json(cfg_path)
    base = cfg_path.parent

    def path_of(key: str) -> Path:
        p = Path(cfg[key])
        return p if p.is_absolute() else base / p

    points = {}
    for role, rel in cfg.get("points", {}).items():
        p = Path(rel)
        points[role] = p if p.is_absolute() else base / p
    output = Path(args.output) if args.output else Path(cfg["output"])
    if not output.is_absolute() and not args.output:
        output = base / output
    return JobConfig(
        original_image=path_of("original_image"),
        semantic_image=path_of("semantic_image"),
        sequential_image=path_of("sequential_image"),
        points=points,
        registry=_load_registry(cfg["categories"], base),
        output=output,
        tile_size=args.tile_size or int(cfg.get("tile_size", 512)),
        channels=[int(c) for c in args.channels.split(",")] if args.channels
        else cfg.get("channels"),
        force=args.force,
        fail_on_overlap=args.fail_on_overlap,
        merged_semantic=args.merged_semantic or bool(cfg.get("merged_semantic", False)),
        workers=args.workers,
    )


def cmd_convert(args) -> int:
    try:
        config = _job_config(args)
        result = run_convert(config)
    except (GeoPanopticError, KeyError, ValueError, OSError) as exc:
        _log(f"error: {exc}")
        return EXIT_INPUT
    for entry in result.rejected:
        _log(f"rejected {entry['role']} point {entry['point_index']}: {entry['reason']}")
    if result.overlap.pairs:
        _log(result.overlap.to_text().rstrip())
    if config.fail_on_overlap and result.overlap.violations:
        _log("error: overlapping validation/test tiles; nothing was written")
        return EXIT_POLICY
    summary = result.manifest["summary"]
    print(f"{'Set':<8s} {'Images':>8s} {'Instances':>10s}")
    for role in SET_NAMES:
        print(f"{role:<8s} {summary[role]['images']:>8d} {summary[role]['instances']:>10d}")
    return EXIT_OK


def cmd_validate(args) -> int:
    root = Path(args.root)
    try:
        violations = validate_dataset_tree(root)
        manifest = load_json(root / "manifest.json")
    except (GeoPanopticError, ValueError, KeyError, OSError) as exc:
        _log(f"error: {exc}")
        return EXIT_INPUT
    windows = [
        TileWindow(w["col0"], w["row0"], w["size"], w["point_index"], role)
        for role in SET_NAMES
        for w in manifest.get("windows", {}).get(role, [])
    ]
    overlap = audit_overlaps(windows)
    for pair in overlap.violations:
        violations.append(
            f"overlap: {pair.window_a.role}[{pair.window_a.source_point_index}] x "
            f"{pair.window_b.role}[{pair.window_b.source_point_index}] ({pair.area} px)"
        )
    for v in violations:
        print(v)
    if violations:
        _log(f"{len(violations)} violation(s)")
        return EXIT_POLICY
    print("dataset valid")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    root = Path(args.gt)
    split = args.split
    try:
        if args.task == "semantic":
            sem_index = load_json(root / "annotations" / f"semantic_{split}.json")
            names = {c["id"]: c["name"] for c in sem_index["categories"]}
            merge_map = None
            if args.merge_things:
                things = [c["id"] for c in sem_index["categories"] if c["isthing"]]
                stuff = [c["id"] for c in sem_index["categories"] if not c["isthing"]]
                merged = max(stuff) + 1
                merge_map = {lbl: merged for lbl in things}
                names = {lbl: names[lbl] for lbl in stuff}
                names[merged] = "All things"
            report = evaluate_semantic(
                root / split / "semantic", args.pred, class_names=names, merge_map=merge_map
            )
        elif args.task == "instance":
            report = evaluate_instance(
                root / "annotations" / f"instances_{split}.json", args.pred
            )
        else:
            gt_json = root / "annotations" / f"panoptic_{split}.json"
            pred_json = Path(args.pred)
            pred_images = Path(args.pred_images) if args.pred_images else pred_json.parent
            registry = registry_from_panoptic_document(gt_json)
            report = evaluate_panoptic(
                gt_json, root / split / "panoptic", pred_json, pred_images, registry
            )
    except (GeoPanopticError, KeyError, ValueError, OSError) as exc:
        _log(f"error: {exc}")
        return EXIT_INPUT
    print(report.to_text(), end="")
    if args.json_out:
        Path(args.json_out).write_bytes(dump_json(report.to_json_dict()))
    return EXIT_OK


def cmd_stats(args) -> int:
    try:
        stats = dataset_stats(args.root)
    except (GeoPanopticError, ValueError, KeyError, OSError) as exc:
        _log(f"error: {exc}")
        return EXIT_INPUT
    print(f"{'Set':<8s} {'Images':>8s} {'Instances':>10s}")
    for role in SET_NAMES:
        row = stats["per_set"][role]
        print(f"{role:<8s} {row['images']:>8d} {row['instances']:>10d}")
    cats = stats["categories"]
    if cats:
        width = max(max(len(c["name"]) for c in cats.values()), len("Category"))
        print()
        print(f"{'Category':<{width}s} {'Label':>6s} {'Kind':>6s} {'Polygons':>9s} {'Pixels':>12s}")
        for lbl, cat in cats.items():
            kind = "thing" if cat["isthing"] else "stuff"
            polys = "-" if cat["polygons"] is None else str(cat["polygons"])
            print(f"{cat['name']:<{width}s} {lbl:>6s} {kind:>6s} {polys:>9s} {cat['pixels']:>12d}")
    if args.json_out:
        Path(args.json_out).write_bytes(dump_json(stats))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geopanoptic",
        description="Compile GIS rasters and point shapefiles into COCO panoptic datasets and score predictions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="tile the input rasters and write the dataset")
    p.add_argument("--config", required=True, help="JSON job configuration")
    p.add_argument("--output", help="override the configured output directory")
    p.add_argument("--tile-size", type=int, dest="tile_size", help="override tile size")
    p.add_argument("--channels", help="comma-separated channel indices from the original image")
    p.add_argument("--force", action="store_true", help="overwrite a non-empty output directory")
    p.add_argument("--fail-on-overlap", action="store_true", dest="fail_on_overlap",
                   help="abort when validation/test tiles overlap")
    p.add_argument("--merged-semantic", action="store_true", dest="merged_semantic",
                   help="also write semantic images with all things as one class")
    p.add_argument("--workers", type=int, default=1, help="parallel tile workers")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("validate", help="re-check an existing dataset tree")
    p.add_argument("root", help="dataset root directory")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("evaluate", help="score predictions against a dataset split")
    p.add_argument("--task", required=True, choices=("semantic", "instance", "panoptic"))
    p.add_argument("--gt", required=True, help="dataset root directory")
    p.add_argument("--split", default="test", choices=SET_NAMES)
    p.add_argument("--pred", required=True,
                   help="prediction path: label-PNG directory (semantic), detections JSON "
                        "(instance), or panoptic JSON (panoptic)")
    p.add_argument("--pred-images", dest="pred_images",
                   help="directory of predicted panoptic PNGs (default: beside the JSON)")
    p.add_argument("--merge-things", action="store_true", dest="merge_things",
                   help="fold all thing classes into one before semantic scoring")
    p.add_argument("--json-out", dest="json_out", help="also write the report as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", help="dataset composition summary")
    p.add_argument("root", help="dataset root directory")
    p.add_argument("--json-out", dest="json_out", help="also write the summary as JSON")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
