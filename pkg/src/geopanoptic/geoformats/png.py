"""8-bit grayscale/truecolor PNG codec, no interlacing.

Writing always uses filter type 0 and a fixed deflate level, so identical
arrays produce identical bytes. Reading handles all five scanline filters
because prediction images may come from arbitrary encoders.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from ..errors import CorruptFileError, UnsupportedFormatError

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _chunk(kind: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(kind + payload) & 0xFFFFFFFF
    return struct.pack(">L", len(payload)) + kind + payload + struct.pack(">L", crc)


def encode_png(array: np.ndarray, compression_level: int = 6) -> bytes:
    """Encode a uint8 array of shape (h, w), (h, w, 1), or (h, w, 3)."""
    arr = np.asarray(array)
    if arr.dtype != np.uint8:
        raise UnsupportedFormatError(f"PNG output requires uint8 samples, got {arr.dtype}")
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise UnsupportedFormatError(f"PNG output requires 1 or 3 channels, got shape {arr.shape}")
    h, w, c = arr.shape
    color_type = 0 if c == 1 else 2
    ihdr = struct.pack(">LLBBBBB", w, h, 8, color_type, 0, 0, 0)
    raw = np.zeros((h, 1 + w * c), dtype=np.uint8)
    raw[:, 1:] = arr.reshape(h, w * c)
    idat = zlib.compress(raw.tobytes(), compression_level)
    return PNG_SIGNATURE + _chunk(b"IHDR", ihdr) + _chunk(b"IDAT", idat) + _chunk(b"IEND", b"")


def decode_png(data: bytes) -> np.ndarray:
    """Decode PNG bytes to a uint8 array of shape (h, w, channels)."""
    if data[:8] != PNG_SIGNATURE:
        raise UnsupportedFormatError("not a PNG file (bad signature)")
    pos = 8
    ihdr = None
    idat = bytearray()
    while pos + 8 <= len(data):
        length, kind = struct.unpack_from(">L4s", data, pos)
        end = pos + 8 + length + 4
        if end > len(data):
            raise CorruptFileError(f"chunk {kind!r} runs past end of file")
        payload = data[pos + 8 : pos + 8 + length]
        (crc,) = struct.unpack_from(">L", data, pos + 8 + length)
        if crc != (zlib.crc32(kind + payload) & 0xFFFFFFFF):
            raise CorruptFileError(f"CRC mismatch in chunk {kind!r}")
        if kind == b"IHDR":
            ihdr = payload
        elif kind == b"IDAT":
            idat += payload
        elif kind == b"IEND":
            break
        pos = end
    if ihdr is None:
        raise CorruptFileError("missing IHDR chunk")
    w, h, depth, color_type, comp, filt, interlace = struct.unpack(">LLBBBBB", ihdr)
    if depth != 8:
        raise UnsupportedFormatError(f"PNG bit depth {depth} outside the 8-bit subset")
    if color_type not in (0, 2):
        raise UnsupportedFormatError(f"PNG color type {color_type} outside grayscale/truecolor")
    if interlace != 0:
        raise UnsupportedFormatError("interlaced PNG is not supported")
    if comp != 0 or filt != 0:
        raise CorruptFileError("unknown compression/filter method")
    channels = 1 if color_type == 0 else 3
    try:
        raw = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise CorruptFileError(f"bad PNG deflate stream: {exc}") from exc
    stride = w * channels
    if len(raw) != h * (1 + stride):
        raise CorruptFileError(f"decompressed size {len(raw)}, expected {h * (1 + stride)}")
    lines = np.frombuffer(raw, dtype=np.uint8).reshape(h, 1 + stride)
    out = _unfilter(lines, channels)
    return out.reshape(h, w, channels)


def _unfilter(lines: np.ndarray, bpp: int) -> np.ndarray:
    h, stride = lines.shape[0], lines.shape[1] - 1
    out = np.zeros((h, stride), dtype=np.uint8)
    prev = np.zeros(stride, dtype=np.uint8)
    for r in range(h):
        ftype = int(lines[r, 0])
        row = lines[r, 1:].copy()
        if ftype == 0:
            pass
        elif ftype == 1:  # Sub: per byte-lane running sum, uint8 wraparound = mod-256
            for lane in range(bpp):
                summed = np.cumsum(row[lane::bpp].astype(np.uint64)) & 0xFF
                row[lane::bpp] = summed.astype(np.uint8)
        elif ftype == 2:  # Up
            row += prev
        elif ftype == 3:  # Average
            for i in range(stride):
                left = int(row[i - bpp]) if i >= bpp else 0
                row[i] = (int(row[i]) + (left + int(prev[i])) // 2) & 0xFF
        elif ftype == 4:  # Paeth
            for i in range(stride):
                left = int(row[i - bpp]) if i >= bpp else 0
                up = int(prev[i])
                ul = int(prev[i - bpp]) if i >= bpp else 0
                row[i] = (int(row[i]) + _paeth(left, up, ul)) & 0xFF
        else:
            raise CorruptFileError(f"unknown PNG filter type {ftype}")
        out[r] = row
        prev = row
    return out


def _paeth(a: int, b: int, c: int) -> int:
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c
