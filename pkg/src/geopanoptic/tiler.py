"""Point-centered tile windows, tile extraction, and the split overlap audit."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DimensionMismatchError, OutOfBoundsError
from .geoformats.raster import GeoTransform, Raster


@dataclass(frozen=True)
class TileWindow:
    """Square pixel window; (col0, row0) is the top-left pixel index."""

    col0: int
    row0: int
    size: int
    source_point_index: int = 0
    role: str = "train"

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"window size must be positive, got {self.size}")

    def intersection_area(self, other: "TileWindow") -> int:
        w = min(self.col0 + self.size, other.col0 + other.size) - max(self.col0, other.col0)
        h = min(self.row0 + self.size, other.row0 + other.size) - max(self.row0, other.row0)
        return max(w, 0) * max(h, 0)


@dataclass(frozen=True)
class OverlapPair:
    index_a: int
    index_b: int
    window_a: TileWindow
    window_b: TileWindow
    area: int
    violation: bool


@dataclass(frozen=True)
class OverlapReport:
    pairs: tuple[OverlapPair, ...]

    @property
    def violations(self) -> tuple[OverlapPair, ...]:
        return tuple(p for p in self.pairs if p.violation)

    def to_json_dict(self) -> dict:
        return {
            "pairs": [
                {
                    "a": {"index": p.index_a, "role": p.window_a.role,
                          "point": p.window_a.source_point_index,
                          "window": [p.window_a.col0, p.window_a.row0, p.window_a.size]},
                    "b": {"index": p.index_b, "role": p.window_b.role,
                          "point": p.window_b.source_point_index,
                          "window": [p.window_b.col0, p.window_b.row0, p.window_b.size]},
                    "intersection_px": p.area,
                    "violation": p.violation,
                }
                for p in self.pairs
            ],
            "violation_count": len(self.violations),
        }

    def to_text(self) -> str:
        if not self.pairs:
            return "no overlapping tile windows\n"
        lines = []
        for p in self.pairs:
            flag = "VIOLATION" if p.violation else "allowed"
            lines.append(
                f"{flag:9s}  {p.window_a.role}[{p.window_a.source_point_index}] "
                f"x {p.window_b.role}[{p.window_b.source_point_index}]  "
                f"intersection {p.area} px"
            )
        lines.append(f"{len(self.violations)} violation(s) in {len(self.pairs)} overlapping pair(s)")
        return "\n".join(lines) + "\n"


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def tile_window(
    gt: GeoTransform,
    raster_dims: tuple[int, int],
    point: tuple[float, float],
    size: int,
    *,
    point_index: int = 0,
    role: str = "train",
) -> TileWindow:
    """Window of ``size`` pixels centered on the pixel nearest the point.

    The continuous pixel coordinate is rounded half-up before subtracting
    half the window. Windows that would leave the raster are rejected, never
    padded or clamped.
    """
    if size < 2 or size % 2 != 0:
        raise ValueError(f"tile size must be even and >= 2, got {size}")
    width, height = raster_dims
    col, row = gt.world_to_pixel(*point)
    col0 = round_half_up(col) - size // 2
    row0 = round_half_up(row) - size // 2
    if col0 < 0 or row0 < 0 or col0 + size > width or row0 + size > height:
        raise OutOfBoundsError(
            f"{role} point {point_index} at pixel ({col:.2f}, {row:.2f}): window "
            f"({col0}, {row0}, {size}) exceeds raster extent {width}x{height}"
        )
    return TileWindow(col0=col0, row0=row0, size=size, source_point_index=point_index, role=role)


def extract_tile(raster: Raster, window: TileWindow) -> Raster:
    """Copy the window out of the raster; the geotransform is translated along."""
    if (
        window.col0 < 0
        or window.row0 < 0
        or window.col0 + window.size > raster.width
        or window.row0 + window.size > raster.height
    ):
        raise DimensionMismatchError(
            f"window ({window.col0}, {window.row0}, {window.size}) does not fit "
            f"raster {raster.width}x{raster.height}"
        )
    block = raster.pixels[
        window.row0 : window.row0 + window.size,
        window.col0 : window.col0 + window.size,
    ]
    gt = raster.geotransform
    if gt is not None:
        gt = gt.translate(window.col0, window.row0)
    return Raster(block, raster.bit_depth, gt)


def audit_overlaps(windows: list[TileWindow], train_may_overlap: bool = True) -> OverlapReport:
    """List every overlapping window pair and flag the disallowed ones.

    Overlaps are violations whenever either window belongs to the validation
    or test split; train-train overlaps are listed for information only
    (unless ``train_may_overlap`` is disabled). Edge-touching windows do not
    overlap.
    """
    pairs = []
    for i in range(len(windows)):
        for j in range(i + 1, len(windows)):
            area = windows[i].intersection_area(windows[j])
            if area <= 0:
                continue
            both_train = windows[i].role == "train" and windows[j].role == "train"
            violation = not (both_train and train_may_overlap)
            pairs.append(OverlapPair(i, j, windows[i], windows[j], area, violation))
    return OverlapReport(pairs=tuple(pairs))
