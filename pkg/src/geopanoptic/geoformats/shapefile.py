"""ESRI shapefile (.shp) point reader/writer.

Header fields are big-endian, record geometry little-endian, per the published
layout. Only point-family shape types are accepted; Z and M values are read
past and dropped. Record order is preserved exactly, since every downstream
image id derives from it.
"""

from __future__ import annotations

import struct
from pathlib import Path

from ..errors import CorruptFileError, WrongShapeTypeError
from .raster import PointSet

FILE_CODE = 9994
HEADER_SIZE = 100
SHAPE_NULL = 0
SHAPE_POINT = 1
SHAPE_POINT_Z = 11
SHAPE_POINT_M = 21
_POINT_TYPES = {SHAPE_POINT, SHAPE_POINT_Z, SHAPE_POINT_M}

_TYPE_NAMES = {
    0: "null", 1: "point", 3: "polyline", 5: "polygon", 8: "multipoint",
    11: "pointz", 13: "polylinez", 15: "polygonz", 18: "multipointz",
    21: "pointm", 23: "polylinem", 25: "polygonm", 28: "multipointm", 31: "multipatch",
}


def read_point_shapefile(path: str | Path, role: str = "train") -> PointSet:
    """Read a point .shp file, keeping records in file order.

    The declared file length is cross-checked against the records actually
    parsed; any disagreement is treated as corruption.
    """
    data = Path(path).read_bytes()
    if len(data) < HEADER_SIZE:
        raise CorruptFileError(f"{path}: shorter than the 100-byte header")
    (file_code,) = struct.unpack_from(">i", data, 0)
    if file_code != FILE_CODE:
        raise CorruptFileError(f"{path}: file code {file_code}, expected {FILE_CODE}")
    (length_words,) = struct.unpack_from(">i", data, 24)
    declared = length_words * 2
    if declared < HEADER_SIZE or declared > len(data):
        raise CorruptFileError(f"{path}: declared length {declared} vs actual {len(data)}")
    (shape_type,) = struct.unpack_from("<i", data, 32)
    if shape_type not in _POINT_TYPES:
        name = _TYPE_NAMES.get(shape_type, str(shape_type))
        raise WrongShapeTypeError(f"{path}: shape type {name!r}, expected a point type")

    points: list[tuple[float, float]] = []
    pos = HEADER_SIZE
    while pos < declared:
        if pos + 12 > declared:
            raise CorruptFileError(f"{path}: truncated record header at offset {pos}")
        _, content_words = struct.unpack_from(">ii", data, pos)
        content_end = pos + 8 + content_words * 2
        if content_end > declared:
            raise CorruptFileError(f"{path}: record at offset {pos} runs past declared length")
        (rec_type,) = struct.unpack_from("<i", data, pos + 8)
        if rec_type == SHAPE_NULL:
            pos = content_end
            continue
        if rec_type != shape_type:
            raise CorruptFileError(f"{path}: record type {rec_type} differs from file type {shape_type}")
        if content_words * 2 < 20:  # shape type + two doubles
            raise CorruptFileError(f"{path}: point record at offset {pos} too short")
        x, y = struct.unpack_from("<dd", data, pos + 12)
        points.append((x, y))
        pos = content_end
    if pos != declared:
        raise CorruptFileError(f"{path}: records end at {pos}, header declared {declared}")
    return PointSet(role=role, points=tuple(points))


def write_point_shapefile(points: list[tuple[float, float]], path: str | Path) -> None:
    """Write plain 2D point records (shape type 1), deterministic bytes."""
    n = len(points)
    if n:
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        bbox = (min(xs), min(ys), max(xs), max(ys))
    else:
        bbox = (0.0, 0.0, 0.0, 0.0)
    record_bytes = 8 + 20  # header + (type, x, y)
    total = HEADER_SIZE + n * record_bytes
    out = bytearray()
    out += struct.pack(">i", FILE_CODE)
    out += b"\x00" * 20
    out += struct.pack(">i", total // 2)
    out += struct.pack("<ii", 1000, SHAPE_POINT)
    out += struct.pack("<4d", *bbox)
    out += struct.pack("<4d", 0.0, 0.0, 0.0, 0.0)  # z and m ranges
    for i, (x, y) in enumerate(points):
        out += struct.pack(">ii", i + 1, 10)  # content = 20 bytes = 10 words
        out += struct.pack("<idd", SHAPE_POINT, x, y)
    Path(path).write_bytes(bytes(out))
