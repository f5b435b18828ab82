"""TIFF subset codec: 8/16-bit unsigned, chunky planes, strips or tiles, none/deflate.

The reader accepts either byte order; the writer always produces little-endian,
single-strip, uncompressed files with a fixed tag layout so identical rasters
encode to identical bytes. Georeferencing round-trips through the pixel-scale
and tie-point tags.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from ..errors import CorruptFileError, UnsupportedFormatError
from .raster import GeoTransform, Raster

TAG_IMAGE_WIDTH = 256
TAG_IMAGE_LENGTH = 257
TAG_BITS_PER_SAMPLE = 258
TAG_COMPRESSION = 259
TAG_PHOTOMETRIC = 262
TAG_STRIP_OFFSETS = 273
TAG_SAMPLES_PER_PIXEL = 277
TAG_ROWS_PER_STRIP = 278
TAG_STRIP_BYTE_COUNTS = 279
TAG_PLANAR_CONFIG = 284
TAG_TILE_WIDTH = 322
TAG_TILE_LENGTH = 323
TAG_TILE_OFFSETS = 324
TAG_TILE_BYTE_COUNTS = 325
TAG_EXTRA_SAMPLES = 338
TAG_SAMPLE_FORMAT = 339
TAG_MODEL_PIXEL_SCALE = 33550
TAG_MODEL_TIEPOINT = 33922
TAG_GEO_KEY_DIRECTORY = 34735

GEOKEY_MODEL_TYPE = 1024
GEOKEY_GEOGRAPHIC_CRS = 2048
GEOKEY_PROJECTED_CRS = 3072

COMPRESSION_NONE = 1
COMPRESSION_DEFLATE = 8
COMPRESSION_DEFLATE_OLD = 32946
_DEFLATE = {COMPRESSION_DEFLATE, COMPRESSION_DEFLATE_OLD}
_JPEG = {6, 7}

TYPE_BYTE = 1
TYPE_ASCII = 2
TYPE_SHORT = 3
TYPE_LONG = 4
TYPE_DOUBLE = 12

_TYPE_SIZES = {1: 1, 2: 1, 3: 2, 4: 4, 5: 8, 6: 1, 7: 1, 8: 2, 9: 4, 10: 8, 11: 4, 12: 8}
_TYPE_CODES = {1: "B", 3: "H", 4: "L", 6: "b", 8: "h", 9: "l", 11: "f", 12: "d"}


def _read_entry(data: bytes, pos: int, endian: str):
    tag, typ, count = struct.unpack_from(endian + "HHL", data, pos)
    size = _TYPE_SIZES.get(typ)
    if size is None:
        return tag, None
    total = size * count
    if total <= 4:
        raw = data[pos + 8 : pos + 8 + total]
    else:
        (offset,) = struct.unpack_from(endian + "L", data, pos + 8)
        raw = data[offset : offset + total]
        if len(raw) < total:
            raise CorruptFileError(f"tag {tag}: value at offset {offset} runs past end of file")
    code = _TYPE_CODES.get(typ)
    if code is None:
        return tag, raw
    return tag, struct.unpack(endian + code * count, raw)


def _parse_ifd(data: bytes, endian: str) -> dict[int, tuple]:
    if len(data) < 8:
        raise CorruptFileError("file shorter than TIFF header")
    (ifd_offset,) = struct.unpack_from(endian + "L", data, 4)
    if ifd_offset + 2 > len(data):
        raise CorruptFileError(f"IFD offset {ifd_offset} past end of file")
    (n_entries,) = struct.unpack_from(endian + "H", data, ifd_offset)
    end = ifd_offset + 2 + 12 * n_entries
    if end + 4 > len(data):
        raise CorruptFileError("IFD runs past end of file")
    tags: dict[int, tuple] = {}
    for i in range(n_entries):
        tag, values = _read_entry(data, ifd_offset + 2 + 12 * i, endian)
        if values is not None:
            tags[tag] = values
    return tags


def _segment_bytes(data: bytes, offset: int, count: int, compression: int, expected: int) -> bytes:
    if offset + count > len(data):
        raise CorruptFileError(f"segment at offset {offset} (+{count}) runs past end of file")
    raw = data[offset : offset + count]
    if compression in _DEFLATE:
        try:
            raw = zlib.decompress(raw)
        except zlib.error as exc:
            raise CorruptFileError(f"bad deflate stream at offset {offset}: {exc}") from exc
    if len(raw) < expected:
        raise CorruptFileError(f"segment at offset {offset}: {len(raw)} bytes, need {expected}")
    return raw[:expected]


def decode_tiff(data: bytes) -> Raster:
    """Decode TIFF bytes within the supported subset.

    Raises UnsupportedFormatError for features outside the subset (JPEG,
    palettes, planar-separate layout, odd bit depths) and CorruptFileError
    for structural damage.
    """
    if data[:2] == b"II":
        endian = "<"
    elif data[:2] == b"MM":
        endian = ">"
    else:
        raise UnsupportedFormatError("not a TIFF file (missing II/MM byte-order mark)")
    (magic,) = struct.unpack_from(endian + "H", data, 2)
    if magic == 43:
        raise UnsupportedFormatError("BigTIFF is not supported")
    if magic != 42:
        raise CorruptFileError(f"bad TIFF magic number {magic}")

    tags = _parse_ifd(data, endian)
    if TAG_IMAGE_WIDTH not in tags or TAG_IMAGE_LENGTH not in tags:
        raise CorruptFileError("missing image dimensions")
    width = int(tags[TAG_IMAGE_WIDTH][0])
    height = int(tags[TAG_IMAGE_LENGTH][0])
    channels = int(tags.get(TAG_SAMPLES_PER_PIXEL, (1,))[0])
    bits = tags.get(TAG_BITS_PER_SAMPLE, (1,))
    if len(bits) == 1 and channels > 1:
        bits = bits * channels
    if len(set(bits)) != 1 or bits[0] not in (8, 16):
        raise UnsupportedFormatError(f"bits per sample {bits} outside the 8/16-bit subset")
    bit_depth = int(bits[0])
    compression = int(tags.get(TAG_COMPRESSION, (1,))[0])
    if compression in _JPEG:
        raise UnsupportedFormatError("JPEG-compressed TIFF is not supported")
    if compression not in _DEFLATE and compression != COMPRESSION_NONE:
        raise UnsupportedFormatError(f"compression scheme {compression} is not supported")
    if int(tags.get(TAG_PHOTOMETRIC, (1,))[0]) == 3:
        raise UnsupportedFormatError("paletted TIFF is not supported")
    if int(tags.get(TAG_PLANAR_CONFIG, (1,))[0]) != 1:
        raise UnsupportedFormatError("planar (band-sequential) TIFF is not supported")
    fmt = tags.get(TAG_SAMPLE_FORMAT)
    if fmt is not None and any(int(v) != 1 for v in fmt):
        raise UnsupportedFormatError("only unsigned integer samples are supported")

    sample_bytes = bit_depth // 8
    dtype = np.dtype(endian + ("u1" if bit_depth == 8 else "u2"))

    if TAG_TILE_OFFSETS in tags:
        arr = _decode_tiled(data, tags, compression, width, height, channels, sample_bytes, dtype)
    elif TAG_STRIP_OFFSETS in tags:
        arr = _decode_striped(data, tags, compression, width, height, channels, sample_bytes, dtype)
    else:
        raise CorruptFileError("no strip or tile offsets present")

    return Raster(
        arr.astype(dtype.newbyteorder("=")),
        bit_depth,
        _geotransform_from_tags(tags),
        _crs_from_tags(tags),
    )


def _decode_striped(data, tags, compression, width, height, channels, sample_bytes, dtype):
    offsets = tags[TAG_STRIP_OFFSETS]
    counts = tags.get(TAG_STRIP_BYTE_COUNTS)
    if counts is None or len(counts) != len(offsets):
        raise CorruptFileError("strip byte counts missing or inconsistent with offsets")
    rows_per_strip = int(tags.get(TAG_ROWS_PER_STRIP, (height,))[0])
    rows_per_strip = min(max(rows_per_strip, 1), height)
    n_strips = (height + rows_per_strip - 1) // rows_per_strip
    if len(offsets) != n_strips:
        raise CorruptFileError(f"{len(offsets)} strips present, geometry requires {n_strips}")
    parts = []
    for i, (off, cnt) in enumerate(zip(offsets, counts)):
        rows = min(rows_per_strip, height - i * rows_per_strip)
        expected = rows * width * channels * sample_bytes
        parts.append(_segment_bytes(data, int(off), int(cnt), compression, expected))
    buf = b"".join(parts)
    return np.frombuffer(buf, dtype=dtype).reshape(height, width, channels)


def _decode_tiled(data, tags, compression, width, height, channels, sample_bytes, dtype):
    if TAG_TILE_WIDTH not in tags or TAG_TILE_LENGTH not in tags:
        raise CorruptFileError("tiled TIFF without tile dimensions")
    tile_w = int(tags[TAG_TILE_WIDTH][0])
    tile_h = int(tags[TAG_TILE_LENGTH][0])
    if tile_w < 1 or tile_h < 1:
        raise CorruptFileError("bad tile dimensions")
    offsets = tags[TAG_TILE_OFFSETS]
    counts = tags.get(TAG_TILE_BYTE_COUNTS)
    if counts is None or len(counts) != len(offsets):
        raise CorruptFileError("tile byte counts missing or inconsistent with offsets")
    across = (width + tile_w - 1) // tile_w
    down = (height + tile_h - 1) // tile_h
    if len(offsets) != across * down:
        raise CorruptFileError(f"{len(offsets)} tiles present, geometry requires {across * down}")
    arr = np.zeros((height, width, channels), dtype=dtype)
    expected = tile_h * tile_w * channels * sample_bytes
    for idx, (off, cnt) in enumerate(zip(offsets, counts)):
        buf = _segment_bytes(data, int(off), int(cnt), compression, expected)
        tile = np.frombuffer(buf, dtype=dtype).reshape(tile_h, tile_w, channels)
        r0 = (idx // across) * tile_h
        c0 = (idx % across) * tile_w
        rows = min(tile_h, height - r0)
        cols = min(tile_w, width - c0)
        arr[r0 : r0 + rows, c0 : c0 + cols] = tile[:rows, :cols]
    return arr


def _crs_from_tags(tags: dict[int, tuple]) -> int | None:
    """EPSG code from the geo-key directory, carried for mismatch warnings only."""
    directory = tags.get(TAG_GEO_KEY_DIRECTORY)
    if directory is None or len(directory) < 4:
        return None
    n_keys = int(directory[3])
    found: dict[int, int] = {}
    for k in range(n_keys):
        entry = directory[4 + 4 * k : 8 + 4 * k]
        if len(entry) < 4:
            break
        key_id, location, count, value = (int(v) for v in entry)
        if location == 0 and count == 1 and key_id in (GEOKEY_PROJECTED_CRS, GEOKEY_GEOGRAPHIC_CRS):
            found[key_id] = value
    code = found.get(GEOKEY_PROJECTED_CRS, found.get(GEOKEY_GEOGRAPHIC_CRS))
    return code if code not in (None, 0, 32767) else None  # 32767 = user-defined


def _geotransform_from_tags(tags: dict[int, tuple]) -> GeoTransform | None:
    scale = tags.get(TAG_MODEL_PIXEL_SCALE)
    tie = tags.get(TAG_MODEL_TIEPOINT)
    if scale is None or tie is None or len(scale) < 2 or len(tie) < 6:
        return None
    sx, sy = float(scale[0]), float(scale[1])
    if sx <= 0 or sy <= 0:
        return None
    i, j, _, x, y, _ = (float(v) for v in tie[:6])
    return GeoTransform(origin_x=x - i * sx, origin_y=y + j * sy, pixel_width=sx, pixel_height=-sy)


def encode_tiff(
    raster: Raster,
    *,
    compression: str = "none",
    layout: str = "strips",
    rows_per_strip: int | None = None,
    tile_size: int = 16,
) -> bytes:
    """Encode a raster as little-endian TIFF bytes.

    The default (single uncompressed strip) is the canonical output form;
    the other layouts exist so every subset variant the reader accepts can
    be produced and round-tripped.
    """
    if compression not in ("none", "deflate"):
        raise ValueError(f"compression must be none or deflate, got {compression!r}")
    if layout not in ("strips", "tiles"):
        raise ValueError(f"layout must be strips or tiles, got {layout!r}")
    h, w, c = raster.height, raster.width, raster.channels
    arr = raster.pixels.astype("<u1" if raster.bit_depth == 8 else "<u2")
    comp_tag = COMPRESSION_NONE if compression == "none" else COMPRESSION_DEFLATE

    if layout == "strips":
        rps = h if rows_per_strip is None else max(1, min(rows_per_strip, h))
        segments = [arr[r : r + rps].tobytes() for r in range(0, h, rps)]
    else:
        if tile_size % 16 != 0:
            raise ValueError("TIFF tile dimensions must be multiples of 16")
        rps = None
        segments = []
        for r0 in range(0, h, tile_size):
            for c0 in range(0, w, tile_size):
                tile = np.zeros((tile_size, tile_size, c), dtype=arr.dtype)
                block = arr[r0 : r0 + tile_size, c0 : c0 + tile_size]
                tile[: block.shape[0], : block.shape[1]] = block
                segments.append(tile.tobytes())
    if compression == "deflate":
        segments = [zlib.compress(s, 6) for s in segments]

    photometric = 2 if c >= 3 else 1
    implied = 3 if photometric == 2 else 1
    extras = c - implied

    entries: list[tuple[int, int, tuple]] = [
        (TAG_IMAGE_WIDTH, TYPE_LONG, (w,)),
        (TAG_IMAGE_LENGTH, TYPE_LONG, (h,)),
        (TAG_BITS_PER_SAMPLE, TYPE_SHORT, (raster.bit_depth,) * c),
        (TAG_COMPRESSION, TYPE_SHORT, (comp_tag,)),
        (TAG_PHOTOMETRIC, TYPE_SHORT, (photometric,)),
        (TAG_SAMPLES_PER_PIXEL, TYPE_SHORT, (c,)),
        (TAG_PLANAR_CONFIG, TYPE_SHORT, (1,)),
        (TAG_SAMPLE_FORMAT, TYPE_SHORT, (1,) * c),
    ]
    if layout == "strips":
        entries.append((TAG_STRIP_OFFSETS, TYPE_LONG, ("data",)))
        entries.append((TAG_ROWS_PER_STRIP, TYPE_LONG, (rps,)))
        entries.append((TAG_STRIP_BYTE_COUNTS, TYPE_LONG, tuple(len(s) for s in segments)))
    else:
        entries.append((TAG_TILE_WIDTH, TYPE_LONG, (tile_size,)))
        entries.append((TAG_TILE_LENGTH, TYPE_LONG, (tile_size,)))
        entries.append((TAG_TILE_OFFSETS, TYPE_LONG, ("data",)))
        entries.append((TAG_TILE_BYTE_COUNTS, TYPE_LONG, tuple(len(s) for s in segments)))
    if extras > 0:
        entries.append((TAG_EXTRA_SAMPLES, TYPE_SHORT, (0,) * extras))
    gt = raster.geotransform
    if gt is not None:
        entries.append((TAG_MODEL_PIXEL_SCALE, TYPE_DOUBLE, (gt.pixel_width, -gt.pixel_height, 0.0)))
        entries.append((TAG_MODEL_TIEPOINT, TYPE_DOUBLE, (0.0, 0.0, 0.0, gt.origin_x, gt.origin_y, 0.0)))
    if raster.crs_epsg is not None:
        # minimal geo-key directory: model type + projected CRS code, inline values
        entries.append((
            TAG_GEO_KEY_DIRECTORY, TYPE_SHORT,
            (1, 1, 0, 2,
             GEOKEY_MODEL_TYPE, 0, 1, 1,
             GEOKEY_PROJECTED_CRS, 0, 1, raster.crs_epsg),
        ))
    entries.sort(key=lambda e: e[0])

    # Layout: header | IFD | out-of-line values | segment data.
    n = len(entries)
    ifd_start = 8
    external_start = ifd_start + 2 + 12 * n + 4
    external_size = 0
    for tag, typ, values in entries:
        count = len(segments) if values == ("data",) else len(values)
        total = _TYPE_SIZES[typ] * count
        if total > 4:
            external_size += total
    data_start = external_start + external_size
    seg_offsets = []
    pos = data_start
    for s in segments:
        seg_offsets.append(pos)
        pos += len(s)

    ifd = bytearray()
    external = bytearray()
    ifd += struct.pack("<H", n)
    for tag, typ, values in entries:
        if values == ("data",):
            values = tuple(seg_offsets)
        count = len(values)
        payload = struct.pack("<" + _TYPE_CODES[typ] * count, *values)
        ifd += struct.pack("<HHL", tag, typ, count)
        if len(payload) <= 4:
            ifd += payload.ljust(4, b"\x00")
        else:
            ifd += struct.pack("<L", external_start + len(external))
            external += payload
    ifd += struct.pack("<L", 0)  # no further IFDs

    out = bytearray()
    out += struct.pack("<2sHL", b"II", 42, ifd_start)
    out += ifd
    out += external
    for s in segments:
        out += s
    return bytes(out)
