"""Exception and warning types raised across the package."""


class GeoPanopticError(Exception):
    """Base class for all errors raised by this package."""


# --- file format errors -----------------------------------------------------

class UnsupportedFormatError(GeoPanopticError):
    """File is recognizable but uses features outside the supported subset."""


class CorruptFileError(GeoPanopticError):
    """File is structurally broken: truncated, bad offsets, failed checksums."""


class RotationUnsupportedError(GeoPanopticError):
    """World file carries nonzero rotation terms; only axis-aligned rasters are handled."""


class ParseError(GeoPanopticError):
    """Text sidecar file does not have the expected structure."""


class WrongShapeTypeError(GeoPanopticError):
    """Shapefile holds a geometry type other than points."""


class UnsupportedCombinationError(GeoPanopticError):
    """Requested output format cannot represent the raster (bit depth / channels)."""


class ConflictingGeoWarning(UserWarning):
    """World file and embedded georeferencing tags disagree; the world file wins."""


class CrsMismatchWarning(UserWarning):
    """Inputs declare different coordinate systems; no transformation is attempted."""


# --- tiling errors ----------------------------------------------------------

class OutOfBoundsError(GeoPanopticError):
    """Tile window centered on a point would fall outside the raster extent."""


class DimensionMismatchError(GeoPanopticError):
    """Two grids that must share a shape do not."""


# --- annotation errors ------------------------------------------------------

class AllVoidError(GeoPanopticError):
    """A labeled region lies entirely over unlabeled semantic pixels."""


class AllVoidWarning(UserWarning):
    """A segment was dropped because its semantic pixels are all void."""


class IdOverflowError(GeoPanopticError):
    """Segment id does not fit the 24-bit RGB encoding."""


class LabelOverflowError(GeoPanopticError):
    """Category label does not fit an 8-bit semantic image."""


# --- dataset errors ---------------------------------------------------------

class NonEmptyTargetError(GeoPanopticError):
    """Output directory already holds files and overwrite was not forced."""


class MissingFileError(GeoPanopticError):
    """A file required by the dataset layout is absent."""


class MalformedSegmentsError(GeoPanopticError):
    """Panoptic PNG and its segments_info disagree about the segment ids present."""


class EmptyDatasetWarning(UserWarning):
    """A produced annotation document contains zero annotations."""


# --- metric errors ----------------------------------------------------------

class EmptyUnionError(GeoPanopticError):
    """IoU requested for two empty pixel sets."""


class ZeroGroundTruthWarning(UserWarning):
    """A category has detections but no ground-truth objects; it is skipped."""
