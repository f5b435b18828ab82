"""Rasterization of polygon rings and run-length masks onto pixel grids."""

from __future__ import annotations

import numpy as np


def fill_rings(rings, width: int, height: int) -> np.ndarray:
    """Fill polygon rings to a boolean mask; a pixel is in when its center is.

    Uses even-odd scanline crossing at pixel centers (x+0.5, y+0.5). Rings on
    the corner lattice therefore rasterize with no boundary ambiguity, and
    filling a traced outer ring reproduces the source pixels of any hole-free
    region exactly.
    """
    mask = np.zeros((height, width), dtype=bool)
    for ring in rings:
        pts = [(float(x), float(y)) for x, y in ring]
        if len(pts) < 3:
            continue
        ys = [p[1] for p in pts]
        r_lo = max(0, int(np.floor(min(ys) - 0.5)))
        r_hi = min(height - 1, int(np.ceil(max(ys))))
        for r in range(r_lo, r_hi + 1):
            yc = r + 0.5
            crossings = []
            for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
                if (y0 <= yc) == (y1 <= yc):
                    continue
                crossings.append(x0 + (yc - y0) * (x1 - x0) / (y1 - y0))
            crossings.sort()
            for xa, xb in zip(crossings[0::2], crossings[1::2]):
                c_lo = max(0, int(np.floor(xa + 0.5)))
                c_hi = min(width, int(np.floor(xb + 0.5)))
                if c_hi > c_lo:
                    mask[r, c_lo:c_hi] ^= True
    return mask


def flat_to_rings(flat_lists) -> list[list[tuple[float, float]]]:
    """COCO segmentation lists [x1, y1, x2, y2, ...] -> vertex rings."""
    rings = []
    for flat in flat_lists:
        if len(flat) < 6 or len(flat) % 2 != 0:
            raise ValueError(f"polygon list of length {len(flat)} is not a ring")
        rings.append([(float(flat[i]), float(flat[i + 1])) for i in range(0, len(flat), 2)])
    return rings


def decode_rle(counts, size) -> np.ndarray:
    """Uncompressed column-major run-length counts -> boolean mask.

    Runs alternate background/foreground starting with background; ``size``
    is (height, width).
    """
    h, w = int(size[0]), int(size[1])
    total = sum(int(c) for c in counts)
    if total != h * w:
        raise ValueError(f"run lengths sum to {total}, grid has {h * w} pixels")
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for c in counts:
        c = int(c)
        if value:
            flat[pos : pos + c] = True
        pos += c
        value = not value
    return flat.reshape((w, h)).T  # column-major


def encode_rle(mask: np.ndarray) -> dict:
    """Boolean mask -> uncompressed column-major run-length dict."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    flat = mask.T.reshape(-1)
    changes = np.nonzero(np.diff(flat))[0] + 1
    bounds = np.concatenate([[0], changes, [flat.size]])
    counts = np.diff(bounds).tolist()
    if flat.size and flat[0]:
        counts = [0] + counts
    return {"size": [h, w], "counts": [int(c) for c in counts]}
