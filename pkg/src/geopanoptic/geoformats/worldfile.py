"""Six-line ASCII world files (.tfw/.pgw/.wld)."""

from __future__ import annotations

from pathlib import Path

from ..errors import ParseError, RotationUnsupportedError
from .raster import GeoTransform


def read_world_file(path: str | Path) -> GeoTransform:
    """Parse a world file into a corner-origin GeoTransform.

    The file stores the center of pixel (0,0); the returned transform shifts
    that by half a pixel per axis so the origin is the pixel's outer corner.
    Rotation lines (D, B) must be exactly zero.
    """
    text = Path(path).read_text(encoding="ascii")
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if len(lines) != 6:
        raise ParseError(f"{path}: world file needs 6 lines, found {len(lines)}")
    try:
        a, d, b, e, c, f = (float(ln) for ln in lines)
    except ValueError as exc:
        raise ParseError(f"{path}: non-numeric world file line: {exc}") from exc
    if d != 0.0 or b != 0.0:
        raise RotationUnsupportedError(f"{path}: rotation terms D={d}, B={b} are not supported")
    if a == 0.0 or e == 0.0:
        raise ParseError(f"{path}: zero pixel size")
    return GeoTransform(
        origin_x=c - a * 0.5,
        origin_y=f - e * 0.5,
        pixel_width=a,
        pixel_height=e,
    )


def write_world_file(gt: GeoTransform, path: str | Path) -> None:
    """Write the corner-origin transform back in the center-of-pixel convention."""
    cx = gt.origin_x + gt.pixel_width * 0.5
    cy = gt.origin_y + gt.pixel_height * 0.5
    lines = [repr(float(v)) for v in (gt.pixel_width, 0.0, 0.0, gt.pixel_height, cx, cy)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def world_file_candidates(path: str | Path) -> list[Path]:
    """Sidecar names tried for a raster: derived extension first, then .wld."""
    p = Path(path)
    out = []
    ext = p.suffix
    if len(ext) >= 3:
        out.append(p.with_suffix("." + ext[1] + ext[-1] + "w"))
    out.append(p.with_suffix(".wld"))
    return out
