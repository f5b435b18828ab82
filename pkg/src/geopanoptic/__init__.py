"""geopanoptic: GIS rasters + point shapefiles -> COCO panoptic datasets, plus the metric suite."""

from .annotator import (
    CategoryEntry,
    CategoryRegistry,
    SegmentRecord,
    TileAnnotation,
    annotate_tile,
    build_segments,
    decode_panoptic_id,
    encode_panoptic_id,
)
from .geoformats import (
    GeoTransform,
    PointSet,
    Raster,
    read_point_shapefile,
    read_raster,
    read_world_file,
    write_point_shapefile,
    write_raster,
)
from .pipeline import JobConfig, run_convert
from .tiler import TileWindow, audit_overlaps, extract_tile, tile_window

__version__ = "0.1.0"

__all__ = [
    "CategoryEntry",
    "CategoryRegistry",
    "GeoTransform",
    "JobConfig",
    "PointSet",
    "Raster",
    "SegmentRecord",
    "TileAnnotation",
    "TileWindow",
    "annotate_tile",
    "audit_overlaps",
    "build_segments",
    "decode_panoptic_id",
    "encode_panoptic_id",
    "extract_tile",
    "read_point_shapefile",
    "read_raster",
    "read_world_file",
    "run_convert",
    "tile_window",
    "write_point_shapefile",
    "write_raster",
]
