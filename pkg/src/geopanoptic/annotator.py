"""Turn a (sequential-id, semantic) tile pair into per-segment annotations.

Thing pixels carry a unique per-polygon value in the sequential tile; stuff
classes are grouped there and recovered from the semantic tile instead. Pixels
sharing a sequential value form one segment even when spatially disconnected.

Boundary tracing works on the pixel-corner lattice with 4-connected
components, which makes polygon-to-mask rasterization exactly invertible for
hole-free regions; holes are not represented in the polygon output.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import AllVoidError, AllVoidWarning, IdOverflowError

Ring = list[tuple[int, int]]

# direction vectors on the corner lattice, x right / y down
_LEFT_TURN = {(0, 1): (1, 0), (1, 0): (0, -1), (0, -1): (-1, 0), (-1, 0): (0, 1)}
_RIGHT_TURN = {v: k for k, v in _LEFT_TURN.items()}
_START_PRIORITY = ((0, 1), (1, 0), (0, -1), (-1, 0))


@dataclass(frozen=True)
class CategoryEntry:
    label: int
    name: str
    isthing: bool


@dataclass(frozen=True)
class CategoryRegistry:
    """Mapping of numeric label -> name and thing/stuff flag; label 0 is void."""

    entries: tuple[CategoryEntry, ...]
    void_label: int = 0

    def __post_init__(self):
        entries = tuple(sorted(self.entries, key=lambda e: e.label))
        labels = [e.label for e in entries]
        if len(set(labels)) != len(labels):
            raise ValueError("category labels must be unique")
        if any(lbl < 0 for lbl in labels):
            raise ValueError("category labels must be non-negative")
        if self.void_label in labels:
            raise ValueError(f"void label {self.void_label} must not be a category")
        if not any(e.isthing for e in entries):
            raise ValueError("registry needs at least one thing category")
        if not any(not e.isthing for e in entries):
            raise ValueError("registry needs at least one stuff category")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "_by_label", {e.label: e for e in entries})

    def has(self, label: int) -> bool:
        return label in self._by_label

    def name(self, label: int) -> str:
        return self._by_label[label].name

    def is_thing(self, label: int) -> bool:
        return self._by_label[label].isthing

    @property
    def thing_labels(self) -> list[int]:
        return [e.label for e in self.entries if e.isthing]

    @property
    def stuff_labels(self) -> list[int]:
        return [e.label for e in self.entries if not e.isthing]

    @property
    def merged_things_label(self) -> int:
        """Label used when all thing classes collapse into one semantic class."""
        return max(self.stuff_labels) + 1

    @classmethod
    def from_json_obj(cls, obj) -> "CategoryRegistry":
        if isinstance(obj, dict):
            void = int(obj.get("void_label", 0))
            items = obj["categories"]
        else:
            void = 0
            items = obj
        entries = tuple(
            CategoryEntry(int(it["label"]), str(it["name"]), bool(it["isthing"])) for it in items
        )
        return cls(entries=entries, void_label=void)

    def to_json_obj(self) -> dict:
        return {
            "void_label": self.void_label,
            "categories": [
                {"label": e.label, "name": e.name, "isthing": e.isthing} for e in self.entries
            ],
        }


@dataclass(frozen=True)
class SegmentRecord:
    """One annotated segment of a tile.

    Rings are pixel-corner vertex lists, implicitly closed; the bbox is the
    tight hull of all ring vertices as (x, y, width, height); the area counts
    actual member pixels, which for regions with holes is smaller than the
    filled polygon area.
    """

    segment_id: int
    category: int
    polygons: tuple[tuple[tuple[int, int], ...], ...]
    bbox: tuple[int, int, int, int]
    area: int
    iscrowd: int = 0

    def __post_init__(self):
        if self.area <= 0:
            raise ValueError("segment area must be positive")
        if self.iscrowd != 0:
            raise ValueError("crowd segments are not produced by this pipeline")


@dataclass
class TileAnnotation:
    """All segments of one tile plus the per-pixel segment-id map (0 = void)."""

    segments: list[SegmentRecord]
    id_map: np.ndarray
    skipped: list[tuple[int, str]] = field(default_factory=list)


def _as_plane(tile) -> np.ndarray:
    """Accept a Raster or a bare 2D array."""
    if hasattr(tile, "plane"):
        if tile.channels != 1:
            raise ValueError(f"expected a single-channel tile, got {tile.channels} channels")
        return tile.plane(0)
    arr = np.asarray(tile)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim != 2:
        raise ValueError(f"expected a 2D label grid, got shape {arr.shape}")
    return arr


def extract_regions(seq_tile) -> dict[int, np.ndarray]:
    """Group pixels by sequential value: one boolean mask per distinct nonzero value.

    Equal values are one region even when spatially disconnected; the value,
    not connectivity, identifies the object.
    """
    plane = _as_plane(seq_tile)
    return {int(v): plane == v for v in np.unique(plane) if v != 0}


def trace_outer_boundaries(mask: np.ndarray) -> list[Ring]:
    """Trace the outer boundary ring of every 4-connected component.

    Vertices are pixel-corner lattice points (x right, y down), wound with the
    interior on the left, collinear vertices merged, rings implicitly closed.
    Hole boundaries are traced internally but not returned.
    """
    mask = np.ascontiguousarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("cannot trace an empty pixel set")
    labels, n = ndimage.label(mask)
    rings: list[Ring] = []
    for comp in range(1, n + 1):
        loops = _trace_component(labels == comp)
        outer = [lp for lp in loops if _signed_area2(lp) < 0]
        assert len(outer) == 1, "each 4-connected component has exactly one outer ring"
        rings.append(_canonical_ring(outer[0]))
    return rings


def _trace_component(mask: np.ndarray) -> list[Ring]:
    edges = _boundary_edges(mask)
    loops = []
    while edges:
        start = min(edges)
        vertex = start
        direction = next(d for d in _START_PRIORITY if d in edges[vertex])
        loop = []
        while True:
            loop.append(vertex)
            nxt = edges[vertex].pop(direction)
            if not edges[vertex]:
                del edges[vertex]
            vertex = nxt
            if vertex == start:
                break
            out = edges[vertex]
            # At a pinch vertex (two outgoing edges) take the rightmost turn:
            # the two complement quadrants there belong to different complement
            # components, and this pairing keeps each loop bounding exactly one
            # of them, so hole loops never merge into the outer ring.
            for cand in (_RIGHT_TURN[direction], direction, _LEFT_TURN[direction]):
                if cand in out:
                    direction = cand
                    break
            else:
                raise AssertionError("boundary edge chain broke")
        loops.append(loop)
    return loops


def _boundary_edges(mask: np.ndarray) -> dict[tuple[int, int], dict[tuple[int, int], tuple[int, int]]]:
    """Directed unit edges of the boundary, interior on the left of each edge."""
    h, w = mask.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask
    inner = padded[1:-1, 1:-1]
    exposed_left = inner & ~padded[1:-1, :-2]
    exposed_right = inner & ~padded[1:-1, 2:]
    exposed_up = inner & ~padded[:-2, 1:-1]
    exposed_down = inner & ~padded[2:, 1:-1]

    edges: dict[tuple[int, int], dict[tuple[int, int], tuple[int, int]]] = {}

    def add(x0, y0, x1, y1):
        edges.setdefault((x0, y0), {})[(x1 - x0, y1 - y0)] = (x1, y1)

    for r, c in zip(*(a.tolist() for a in np.nonzero(exposed_left))):
        add(c, r, c, r + 1)  # down along the left side
    for r, c in zip(*(a.tolist() for a in np.nonzero(exposed_down))):
        add(c, r + 1, c + 1, r + 1)  # right along the bottom
    for r, c in zip(*(a.tolist() for a in np.nonzero(exposed_right))):
        add(c + 1, r + 1, c + 1, r)  # up along the right side
    for r, c in zip(*(a.tolist() for a in np.nonzero(exposed_up))):
        add(c + 1, r, c, r)  # left along the top
    return edges


def _signed_area2(ring: Ring) -> int:
    total = 0
    for (x0, y0), (x1, y1) in zip(ring, ring[1:] + ring[:1]):
        total += x0 * y1 - x1 * y0
    return total


def _canonical_ring(loop: Ring) -> Ring:
    merged = []
    n = len(loop)
    for i, v in enumerate(loop):
        prev_v = loop[i - 1]
        next_v = loop[(i + 1) % n]
        din = (v[0] - prev_v[0], v[1] - prev_v[1])
        dout = (next_v[0] - v[0], next_v[1] - v[1])
        if din != dout:
            merged.append(v)
    pivot = merged.index(min(merged))
    return merged[pivot:] + merged[:pivot]


def assign_category(mask: np.ndarray, semantic_tile, void_label: int = 0) -> int:
    """Majority semantic label over the region; ties break toward the smaller label.

    Void pixels do not vote; a region voting entirely void is an error the
    caller turns into a dropped segment.
    """
    plane = _as_plane(semantic_tile)
    if plane.shape != mask.shape:
        raise ValueError(f"semantic tile shape {plane.shape} != region grid {mask.shape}")
    votes = plane[mask]
    votes = votes[votes != void_label]
    if votes.size == 0:
        raise AllVoidError("region lies entirely over void semantic pixels")
    counts = np.bincount(votes.astype(np.int64))
    return int(counts.argmax())


def _ring_bbox(polygons) -> tuple[int, int, int, int]:
    xs = [x for ring in polygons for x, _ in ring]
    ys = [y for ring in polygons for _, y in ring]
    return (min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys))


def annotate_tile(seq_tile, semantic_tile, registry: CategoryRegistry) -> TileAnnotation:
    """Build every segment of a tile and the matching segment-id map.

    Per-image segment ids run from 1: stuff classes first in ascending label
    order (one segment per stuff class present, excluding pixels claimed by
    things), then things in ascending sequential-value order. Thing regions
    whose semantic pixels are all void are skipped with a warning.
    """
    seq = _as_plane(seq_tile)
    sem = _as_plane(semantic_tile)
    if seq.shape != sem.shape:
        raise ValueError(f"sequential {seq.shape} and semantic {sem.shape} tiles differ in shape")
    void = registry.void_label

    segments: list[SegmentRecord] = []
    skipped: list[tuple[int, str]] = []
    id_map = np.zeros(seq.shape, dtype=np.int32)
    next_id = 1

    unclaimed = seq == 0
    for label in registry.stuff_labels:
        stuff_mask = (sem == label) & unclaimed
        if not stuff_mask.any():
            continue
        polygons = tuple(tuple(ring) for ring in trace_outer_boundaries(stuff_mask))
        segments.append(
            SegmentRecord(
                segment_id=next_id,
                category=label,
                polygons=polygons,
                bbox=_ring_bbox(polygons),
                area=int(stuff_mask.sum()),
            )
        )
        id_map[stuff_mask] = next_id
        next_id += 1

    regions = extract_regions(seq)
    for value in sorted(regions):
        mask = regions[value]
        try:
            category = assign_category(mask, sem, void)
        except AllVoidError:
            warnings.warn(
                f"sequential value {value}: all semantic pixels void, segment dropped",
                AllVoidWarning,
                stacklevel=2,
            )
            skipped.append((value, "all-void"))
            continue
        polygons = tuple(tuple(ring) for ring in trace_outer_boundaries(mask))
        segments.append(
            SegmentRecord(
                segment_id=next_id,
                category=category,
                polygons=polygons,
                bbox=_ring_bbox(polygons),
                area=int(mask.sum()),
            )
        )
        id_map[mask] = next_id
        next_id += 1

    return TileAnnotation(segments=segments, id_map=id_map, skipped=skipped)


def build_segments(seq_tile, semantic_tile, registry: CategoryRegistry) -> list[SegmentRecord]:
    """Segment list of a tile; see annotate_tile for ordering and id rules."""
    return annotate_tile(seq_tile, semantic_tile, registry).segments


def encode_panoptic_id(segment_id: int) -> tuple[int, int, int]:
    """Encode a segment id as base-256 (R, G, B); id 0 is reserved for void."""
    if not (0 <= segment_id < 256**3):
        raise IdOverflowError(f"segment id {segment_id} outside [0, 256^3)")
    return segment_id % 256, (segment_id // 256) % 256, segment_id // 65536


def decode_panoptic_id(rgb: tuple[int, int, int]) -> int:
    r, g, b = (int(v) for v in rgb)
    if not all(0 <= v < 256 for v in (r, g, b)):
        raise IdOverflowError(f"RGB triple {rgb} out of byte range")
    return r + 256 * g + 65536 * b


def id_map_to_rgb(id_map: np.ndarray) -> np.ndarray:
    """Expand a segment-id map to the 3-channel base-256 image."""
    ids = np.asarray(id_map, dtype=np.int64)
    if ids.min() < 0 or ids.max() >= 256**3:
        raise IdOverflowError("segment id map outside [0, 256^3)")
    rgb = np.zeros((*ids.shape, 3), dtype=np.uint8)
    rgb[:, :, 0] = ids % 256
    rgb[:, :, 1] = (ids // 256) % 256
    rgb[:, :, 2] = ids // 65536
    return rgb


def rgb_to_id_map(rgb: np.ndarray) -> np.ndarray:
    """Fold a 3-channel base-256 image back into a segment-id map."""
    arr = np.asarray(rgb, dtype=np.int64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) image, got shape {arr.shape}")
    return arr[:, :, 0] + 256 * arr[:, :, 1] + 65536 * arr[:, :, 2]
