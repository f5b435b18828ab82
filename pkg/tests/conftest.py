"""Shared synthetic-scene builders and independent brute-force oracles.

The oracles deliberately re-derive results from first principles (python
sets, explicit loops) so they share no code path with the implementations
they check.
"""

from __future__ import annotations

import numpy as np
import pytest

from geopanoptic.annotator import CategoryEntry, CategoryRegistry


@pytest.fixture
def registry() -> CategoryRegistry:
    return CategoryRegistry(
        entries=(
            CategoryEntry(1, "street", False),
            CategoryEntry(2, "permeable", False),
            CategoryEntry(3, "lake", False),
            CategoryEntry(6, "vehicle", True),
            CategoryEntry(13, "house", True),
        )
    )


# --- synthetic scenes ---------------------------------------------------------


def grow_blob(rng: np.random.Generator, height: int, width: int, target: int) -> np.ndarray:
    """Random 4-connected blob with holes filled, alone on its grid."""
    mask = np.zeros((height, width), dtype=bool)
    r = int(rng.integers(0, height))
    c = int(rng.integers(0, width))
    mask[r, c] = True
    frontier = [(r, c)]
    while mask.sum() < target and frontier:
        r, c = frontier[int(rng.integers(0, len(frontier)))]
        neighbors = [
            (rr, cc)
            for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1))
            if 0 <= rr < height and 0 <= cc < width and not mask[rr, cc]
        ]
        if not neighbors:
            frontier.remove((r, c))
            continue
        rr, cc = neighbors[int(rng.integers(0, len(neighbors)))]
        mask[rr, cc] = True
        frontier.append((rr, cc))
    return fill_holes(mask)


def fill_holes(mask: np.ndarray) -> np.ndarray:
    """Add every complement component that does not touch the grid border."""
    h, w = mask.shape
    outside = np.zeros((h + 2, w + 2), dtype=bool)
    stack = [(0, 0)]
    blocked = np.zeros((h + 2, w + 2), dtype=bool)
    blocked[1:-1, 1:-1] = mask
    while stack:
        r, c = stack.pop()
        if r < 0 or r >= h + 2 or c < 0 or c >= w + 2 or outside[r, c] or blocked[r, c]:
            continue
        outside[r, c] = True
        stack.extend(((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)))
    return ~outside[1:-1, 1:-1]


def has_hole(mask: np.ndarray) -> bool:
    return bool((fill_holes(mask) & ~mask).any())


def random_scene(
    rng: np.random.Generator,
    size: int = 32,
    max_things: int = 8,
    stuff_labels=(1, 2, 3),
    thing_labels=(6, 13),
    void_patch: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """(sequential, semantic) pair: disjoint hole-free things over banded stuff."""
    sem = np.zeros((size, size), dtype=np.uint8)
    n_stuff = int(rng.integers(1, len(stuff_labels) + 1))
    bands = sorted(rng.choice(size, size=n_stuff - 1, replace=False).tolist()) if n_stuff > 1 else []
    edges = [0, *bands, size]
    for i in range(n_stuff):
        sem[edges[i] : edges[i + 1], :] = stuff_labels[i]
    if void_patch and rng.random() < 0.7:
        r0, c0 = rng.integers(0, size, 2)
        sem[r0 : r0 + int(rng.integers(1, 6)), c0 : c0 + int(rng.integers(1, 6))] = 0

    seq = np.zeros((size, size), dtype=np.uint16)
    n_things = int(rng.integers(0, max_things + 1))
    value = 1
    for _ in range(n_things):
        target = int(rng.integers(1, max(2, size * size // 24)))
        blob = grow_blob(rng, size, size, target)
        if (blob & (seq != 0)).any():
            continue  # collides with an earlier thing: drop this one
        seq[blob] = value
        sem[blob] = int(rng.choice(thing_labels))
        value += 1
    return seq, sem


# --- geometry oracles -----------------------------------------------------------


def boundary_edge_set(mask: np.ndarray) -> set[frozenset]:
    """All undirected unit boundary edges of a pixel set, by naive enumeration."""
    h, w = mask.shape
    edges = set()
    for r in range(h):
        for c in range(w):
            if not mask[r, c]:
                continue
            if c == 0 or not mask[r, c - 1]:
                edges.add(frozenset(((c, r), (c, r + 1))))
            if c == w - 1 or not mask[r, c + 1]:
                edges.add(frozenset(((c + 1, r), (c + 1, r + 1))))
            if r == 0 or not mask[r - 1, c]:
                edges.add(frozenset(((c, r), (c + 1, r))))
            if r == h - 1 or not mask[r + 1, c]:
                edges.add(frozenset(((c, r + 1), (c + 1, r + 1))))
    return edges


def ring_edge_set(rings) -> set[frozenset]:
    """Undirected unit edges swept by rings (vertices may skip collinear runs)."""
    edges = set()
    for ring in rings:
        for (x0, y0), (x1, y1) in zip(ring, list(ring[1:]) + [ring[0]]):
            dx = (x1 > x0) - (x1 < x0)
            dy = (y1 > y0) - (y1 < y0)
            x, y = x0, y0
            while (x, y) != (x1, y1):
                edges.add(frozenset(((x, y), (x + dx, y + dy))))
                x, y = x + dx, y + dy
    return edges


# --- metric oracles -------------------------------------------------------------


def semantic_oracle(gt: np.ndarray, pred: np.ndarray, ignore: int = 0) -> dict:
    """Per-class IoU/Acc and the four aggregates via python-set arithmetic."""
    valid = [(r, c) for r in range(gt.shape[0]) for c in range(gt.shape[1]) if gt[r, c] != ignore]
    labels = sorted(
        {int(gt[p]) for p in valid} | {int(pred[p]) for p in valid} - {ignore}
    )
    labels = [lbl for lbl in labels if lbl != ignore]
    n = len(valid)
    per_class = {}
    ious, accs, fw = [], [], []
    correct = 0
    for lbl in labels:
        gt_set = {p for p in valid if gt[p] == lbl}
        pred_set = {p for p in valid if pred[p] == lbl}
        tp = len(gt_set & pred_set)
        fp = len(pred_set - gt_set)
        fn = len(gt_set - pred_set)
        correct += tp
        if tp + fp + fn == 0:
            continue
        iou = tp / (tp + fp + fn)
        per_class[lbl] = iou
        ious.append(iou)
        fw.append(len(gt_set) / n * iou)
        if gt_set:
            accs.append(tp / len(gt_set))
    return {
        "per_class": per_class,
        "pacc": correct / n if n else 0.0,
        "miou": sum(ious) / len(ious) if ious else 0.0,
        "macc": sum(accs) / len(accs) if accs else 0.0,
        "fwiou": sum(fw),
    }


def ap_oracle(tp_flags, n_gt: int) -> float:
    """101-point AP by literal definition: max precision at recall >= r."""
    points = []
    tp = fp = 0
    for flag in tp_flags:
        tp += bool(flag)
        fp += not flag
        points.append((tp / n_gt, tp / (tp + fp)))
    total = 0.0
    for i in range(101):
        r = i / 100
        best = 0.0
        for rec, prec in points:
            if rec >= r and prec > best:
                best = prec
        total += best
    return total / 101


def brute_force_pq_match(gt_map, gt_cats, pred_map, pred_cats):
    """Set-arithmetic matcher: all cross pairs, IoU > 0.5 rule, void discard.

    gt_cats / pred_cats map segment id -> category. Returns TP pairs with
    IoU, FP pred ids, FN gt ids.
    """
    h, w = gt_map.shape
    gt_px: dict[int, set] = {}
    pred_px: dict[int, set] = {}
    void = set()
    for r in range(h):
        for c in range(w):
            g = int(gt_map[r, c])
            p = int(pred_map[r, c])
            if g == 0:
                void.add((r, c))
            else:
                gt_px.setdefault(g, set()).add((r, c))
            if p != 0:
                pred_px.setdefault(p, set()).add((r, c))
    tp = []
    matched_gt, matched_pred = set(), set()
    for g, gp in gt_px.items():
        for p, pp in pred_px.items():
            if gt_cats[g] != pred_cats[p]:
                continue
            inter = len(gp & pp)
            union = len(gp | (pp - void))
            if union == 0:
                continue
            iou = inter / union
            if iou > 0.5:
                tp.append((g, p, iou))
                matched_gt.add(g)
                matched_pred.add(p)
    fn = sorted(set(gt_px) - matched_gt)
    fp = []
    for p, pp in pred_px.items():
        if p in matched_pred:
            continue
        if len(pp & void) / len(pp) > 0.5:
            continue
        fp.append(p)
    return tp, sorted(fp), fn


def write_conversion_inputs(
    root,
    rng: np.random.Generator,
    *,
    size: int = 384,
    tile_size: int = 128,
    train_points=None,
    valid_points=None,
    test_points=None,
) -> dict:
    """Materialize a synthetic raster trio + shapefiles + job config on disk.

    Default points give three clean quadrant-separated tiles per the layout:
    train windows may overlap each other, valid/test are disjoint from all.
    """
    import json

    from geopanoptic.geoformats import GeoTransform, Raster, write_point_shapefile, write_raster

    root.mkdir(parents=True, exist_ok=True)
    gt = GeoTransform(1000.0, 2000.0, 0.5, -0.5)
    sem = np.zeros((size, size), dtype=np.uint8)
    sem[:, : size // 2] = 1
    sem[:, size // 2 :] = 2
    sem[: size // 4, : size // 4] = 3
    seq = np.zeros((size, size), dtype=np.uint16)
    value = 1
    for _ in range(24):
        r0, c0 = rng.integers(0, size - 12, 2)
        hh, ww = rng.integers(2, 12, 2)
        block = (slice(r0, r0 + hh), slice(c0, c0 + ww))
        if (seq[block] != 0).any():
            continue
        seq[block] = value
        sem[block] = int(rng.choice([6, 13]))
        value += 1
    orig = rng.integers(0, 256, (size, size, 3), dtype=np.uint8)
    write_raster(Raster(orig, 8, gt), root / "orig.tif")
    write_raster(Raster(sem, 8, gt), root / "sem.tif")
    write_raster(Raster(seq, 16, gt), root / "seq.tif")

    half = tile_size // 2
    if train_points is None:
        train_points = [(half, half), (half + 16, half + 16), (half + 128, half)]
    if valid_points is None:
        valid_points = [(size - half, half)]
    if test_points is None:
        test_points = [(half, size - half)]
    for name, pts in (("train", train_points), ("valid", valid_points), ("test", test_points)):
        world = [gt.pixel_to_world(c, r) for c, r in pts]
        write_point_shapefile(world, root / f"{name}.shp")

    categories = {
        "void_label": 0,
        "categories": [
            {"label": 1, "name": "street", "isthing": False},
            {"label": 2, "name": "permeable", "isthing": False},
            {"label": 3, "name": "lake", "isthing": False},
            {"label": 6, "name": "vehicle", "isthing": True},
            {"label": 13, "name": "house", "isthing": True},
        ],
    }
    (root / "categories.json").write_text(json.dumps(categories))
    config = {
        "original_image": "orig.tif",
        "semantic_image": "sem.tif",
        "sequential_image": "seq.tif",
        "points": {"train": "train.shp", "valid": "valid.shp", "test": "test.shp"},
        "tile_size": tile_size,
        "categories": "categories.json",
        "output": "dataset",
    }
    (root / "job.json").write_text(json.dumps(config))
    return {
        "config": root / "job.json",
        "output": root / "dataset",
        "sem": sem,
        "seq": seq,
        "geotransform": gt,
    }


def random_panoptic_pair(rng: np.random.Generator, size: int = 12, max_segments: int = 6,
                         categories=(1, 2, 6)):
    """Random GT/pred id maps with consistent segments_info lists."""

    def one_map(start_id: int):
        id_map = np.zeros((size, size), dtype=np.int64)
        cats = {}
        sid = start_id
        for _ in range(int(rng.integers(1, max_segments + 1))):
            r0, c0 = rng.integers(0, size, 2)
            hh, ww = rng.integers(1, size // 2 + 1, 2)
            id_map[r0 : r0 + hh, c0 : c0 + ww] = sid
            cats[sid] = int(rng.choice(categories))
            sid += 1
        present = {int(v) for v in np.unique(id_map) if v != 0}
        cats = {k: v for k, v in cats.items() if k in present}
        info = [{"id": k, "category_id": v} for k, v in sorted(cats.items())]
        return id_map, cats, info

    gt_map, gt_cats, gt_info = one_map(1)
    pred_map, pred_cats, pred_info = one_map(101)
    # nudge prediction toward ground truth so true positives occur
    if rng.random() < 0.7:
        copy_mask = rng.random((size, size)) < 0.6
        pred_map = np.where(copy_mask & (gt_map > 0), gt_map + 200, pred_map)
        for sid, cat in gt_cats.items():
            if sid + 200 in np.unique(pred_map):
                pred_cats[sid + 200] = cat
        present = {int(v) for v in np.unique(pred_map) if v != 0}
        pred_cats = {k: v for k, v in pred_cats.items() if k in present}
        pred_info = [{"id": k, "category_id": v} for k, v in sorted(pred_cats.items())]
    return (gt_map, gt_cats, gt_info), (pred_map, pred_cats, pred_info)
