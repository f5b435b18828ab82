"""Readers and writers for the external binary formats of the pipeline."""

from __future__ import annotations

import warnings
from pathlib import Path

from ..errors import ConflictingGeoWarning, UnsupportedCombinationError, UnsupportedFormatError
from .png import decode_png, encode_png
from .raster import GeoTransform, PointSet, Raster, pixel_to_world, world_to_pixel
from .shapefile import read_point_shapefile, write_point_shapefile
from .tiff import decode_tiff, encode_tiff
from .worldfile import read_world_file, world_file_candidates, write_world_file

__all__ = [
    "GeoTransform",
    "PointSet",
    "Raster",
    "decode_png",
    "decode_tiff",
    "encode_png",
    "encode_tiff",
    "pixel_to_world",
    "read_point_shapefile",
    "read_raster",
    "read_world_file",
    "world_file_candidates",
    "world_to_pixel",
    "write_point_shapefile",
    "write_raster",
    "write_world_file",
]


def read_raster(path: str | Path) -> Raster:
    """Read a TIFF (subset) or PNG raster, attaching georeferencing if available.

    A world-file sidecar is the canonical georeferencing source; embedded
    tie-point/scale tags are the fallback. When both exist and disagree by
    more than 1e-6 relative, a ConflictingGeoWarning is emitted and the world
    file wins.
    """
    path = Path(path)
    data = path.read_bytes()
    if data[:4] in (b"II*\x00", b"MM\x00*", b"II+\x00", b"MM\x00+"):
        raster = decode_tiff(data)
    elif data[:8] == b"\x89PNG\r\n\x1a\n":
        raster = Raster(decode_png(data), 8)
    else:
        raise UnsupportedFormatError(f"{path}: neither a TIFF nor a PNG file")

    sidecar = next((c for c in world_file_candidates(path) if c.exists()), None)
    tag_gt = raster.geotransform
    if sidecar is not None:
        file_gt = read_world_file(sidecar)
        if tag_gt is not None and not tag_gt.approx_equal(file_gt, rel_tol=1e-6):
            warnings.warn(
                f"{path}: world file {sidecar.name} disagrees with embedded tags "
                f"({file_gt} vs {tag_gt}); using the world file",
                ConflictingGeoWarning,
                stacklevel=2,
            )
        return Raster(raster.pixels, raster.bit_depth, file_gt, raster.crs_epsg)
    return raster


def write_raster(raster: Raster, path: str | Path, format: str = "tiff") -> None:
    """Write a raster as uncompressed stripped TIFF or 8-bit PNG.

    Writing is deterministic: the same raster always produces the same bytes.
    """
    path = Path(path)
    if format == "tiff":
        path.write_bytes(encode_tiff(raster))
    elif format == "png8":
        if raster.bit_depth != 8 or raster.channels not in (1, 3):
            raise UnsupportedCombinationError(
                f"png8 requires 8-bit, 1- or 3-channel rasters; "
                f"got {raster.bit_depth}-bit, {raster.channels} channels"
            )
        path.write_bytes(encode_png(raster.pixels))
    else:
        raise UnsupportedCombinationError(f"unknown output format {format!r}")
