"""Core in-memory types: pixel grids, affine georeferencing, and point sets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_DTYPES = {8: np.uint8, 16: np.uint16}


@dataclass(frozen=True)
class GeoTransform:
    """Axis-aligned affine mapping from pixel indices to world coordinates.

    ``origin_x``/``origin_y`` locate the outer corner of pixel (0, 0); for a
    north-up raster ``pixel_height`` is negative. Rotation terms are fixed at
    zero by construction.
    """

    origin_x: float
    origin_y: float
    pixel_width: float
    pixel_height: float

    def __post_init__(self):
        if self.pixel_width == 0 or self.pixel_height == 0:
            raise ValueError("pixel size must be nonzero")

    def world_to_pixel(self, x: float, y: float) -> tuple[float, float]:
        """Map a world coordinate to a continuous (col, row) pixel coordinate."""
        return (x - self.origin_x) / self.pixel_width, (y - self.origin_y) / self.pixel_height

    def pixel_to_world(self, col: float, row: float) -> tuple[float, float]:
        """Map a continuous (col, row) pixel coordinate to world coordinates."""
        return self.origin_x + col * self.pixel_width, self.origin_y + row * self.pixel_height

    def translate(self, dcol: int, drow: int) -> "GeoTransform":
        """GeoTransform of a sub-grid whose pixel (0,0) is source pixel (dcol, drow)."""
        x, y = self.pixel_to_world(dcol, drow)
        return GeoTransform(x, y, self.pixel_width, self.pixel_height)

    def approx_equal(self, other: "GeoTransform", rel_tol: float = 1e-6) -> bool:
        pairs = (
            (self.origin_x, other.origin_x),
            (self.origin_y, other.origin_y),
            (self.pixel_width, other.pixel_width),
            (self.pixel_height, other.pixel_height),
        )
        return all(math.isclose(a, b, rel_tol=rel_tol, abs_tol=1e-9) for a, b in pairs)


def world_to_pixel(gt: GeoTransform, x: float, y: float) -> tuple[float, float]:
    return gt.world_to_pixel(x, y)


def pixel_to_world(gt: GeoTransform, col: float, row: float) -> tuple[float, float]:
    return gt.pixel_to_world(col, row)


@dataclass(frozen=True)
class Raster:
    """Immutable pixel grid, shape (height, width, channels), unsigned 8 or 16 bit.

    Samples are stored row-major and band-interleaved-by-pixel; the backing
    array is locked read-only so instances are safe to share across threads.
    ``crs_epsg`` is carried verbatim for mismatch warnings only; no coordinate
    transformation is ever performed.
    """

    pixels: np.ndarray
    bit_depth: int
    geotransform: GeoTransform | None = None
    crs_epsg: int | None = None

    def __post_init__(self):
        if self.bit_depth not in _DTYPES:
            raise ValueError(f"bit depth must be 8 or 16, got {self.bit_depth}")
        src = np.asarray(self.pixels)
        if src.dtype != _DTYPES[self.bit_depth] and src.size:
            lo, hi = src.min(), src.max()
            if lo < 0 or hi >= 2**self.bit_depth:
                raise ValueError(
                    f"sample range [{lo}, {hi}] does not fit {self.bit_depth} unsigned bits"
                )
        arr = np.array(src, dtype=_DTYPES[self.bit_depth], copy=True, order="C")
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3 or arr.shape[2] < 1:
            raise ValueError(f"pixel grid must be (height, width, channels), got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def plane(self, channel: int = 0) -> np.ndarray:
        """Single band as a 2D read-only array."""
        return self.pixels[:, :, channel]

    def select_channels(self, indices: list[int]) -> "Raster":
        if any(i < 0 or i >= self.channels for i in indices):
            raise ValueError(f"channel selection {indices} out of range for {self.channels} bands")
        return Raster(self.pixels[:, :, indices], self.bit_depth, self.geotransform, self.crs_epsg)

    def same_grid(self, other: "Raster", rel_tol: float = 1e-6) -> bool:
        """True when two rasters cover the same pixel grid and georeferencing."""
        if (self.width, self.height) != (other.width, other.height):
            return False
        if (self.geotransform is None) != (other.geotransform is None):
            return False
        if self.geotransform is None:
            return True
        return self.geotransform.approx_equal(other.geotransform, rel_tol)


@dataclass(frozen=True)
class PointSet:
    """Ordered world-coordinate points for one split; order follows file record order."""

    role: str
    points: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.role not in ("train", "valid", "test"):
            raise ValueError(f"role must be train/valid/test, got {self.role!r}")
        object.__setattr__(self, "points", tuple((float(x), float(y)) for x, y in self.points))

    def __len__(self) -> int:
        return len(self.points)
