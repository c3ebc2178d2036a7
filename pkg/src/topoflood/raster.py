"""Aligned raster triplet: elevation grid, RGB imagery, annotation mask.

Everything downstream (topology, selection, meshing, aggregation) consumes the
types defined here. All rasters are stored as 2-D numpy arrays in row-major
order with shape (height, width); pixel (row, col) indexes them directly.

Supported file formats:

* elevation — ESRI ASCII grid, or raw little-endian float32 with a sidecar
  text header of ``key value`` lines (``width``, ``height``, ``cell_size``);
* annotation masks — single-channel 8-bit PNG with 0=unlabeled, 1=flooded,
  2=dry (an RGBA red/blue texture can be imported as an alternative);
* imagery — 8-bit RGB PNG.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import (
    DimensionMismatch,
    IllegalLabelValue,
    NoDataPresent,
    ParseError,
)

# Annotation label values (canonical byte encoding).
UNLABELED = 0
FLOODED = 1
DRY = 2

_ASCII_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize")


@dataclass(frozen=True)
class DemGrid:
    """Elevation raster in meters on a regular grid.

    ``values`` has shape (height, width); every cell is finite. ``cell_size``
    is the ground resolution in meters per pixel.
    """

    values: np.ndarray
    cell_size: float = 1.0
    min_value: float = field(init=False, default=0.0)
    max_value: float = field(init=False, default=0.0)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("DemGrid values must be 2-D (height, width)")
        if v.shape[0] < 2 or v.shape[1] < 2:
            raise DimensionMismatch(f"grid must be at least 2x2, got {v.shape[1]}x{v.shape[0]}")
        if not np.isfinite(v).all():
            raise NoDataPresent("grid contains non-finite cells; pre-fill before construction")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "min_value", float(v.min()))
        object.__setattr__(self, "max_value", float(v.max()))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class NormalizedField:
    """Elevation rescaled to [0, 1]; the unit every threshold is expressed in.

    ``degenerate`` is set when the source grid was constant (zero range); the
    field is then identically zero.
    """

    f: np.ndarray
    source_range: tuple[float, float]
    degenerate: bool = False

    @property
    def width(self) -> int:
        return self.f.shape[1]

    @property
    def height(self) -> int:
        return self.f.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.f.shape

    @property
    def size(self) -> int:
        return self.f.size


@dataclass(frozen=True)
class RgbRaster:
    """8-bit RGB imagery, shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.uint8)
        if p.ndim != 3 or p.shape[2] != 3:
            raise ValueError("RgbRaster pixels must have shape (height, width, 3)")
        object.__setattr__(self, "pixels", p)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape[:2]


@dataclass
class AnnotationMask:
    """Per-pixel labels from {UNLABELED, FLOODED, DRY}, shape (height, width)."""

    labels: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.labels, dtype=np.uint8)
        if m.ndim != 2:
            raise ValueError("mask labels must be 2-D (height, width)")
        if m.size and m.max() > DRY:
            raise IllegalLabelValue(f"mask contains value {int(m.max())}, legal values are 0/1/2")
        self.labels = m

    @classmethod
    def empty(cls, height: int, width: int) -> "AnnotationMask":
        return cls(np.zeros((height, width), dtype=np.uint8))

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def copy(self) -> "AnnotationMask":
        return AnnotationMask(self.labels.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, AnnotationMask):
            return NotImplemented
        return self.labels.shape == other.labels.shape and bool(
            np.array_equal(self.labels, other.labels)
        )


# ---------------------------------------------------------------------------
# elevation ingestion
# ---------------------------------------------------------------------------

def _parse_ascii_grid(text: str) -> tuple[np.ndarray, float]:
    """Parse an ESRI ASCII grid into (values-with-NaN, cell_size)."""
    tokens = text.split()
    header: dict[str, float] = {}
    pos = 0
    while pos + 1 < len(tokens):
        key = tokens[pos].lower()
        if key in _ASCII_HEADER_KEYS or key == "nodata_value":
            try:
                header[key] = float(tokens[pos + 1])
            except ValueError as exc:
                raise ParseError(f"bad header value for {key}: {tokens[pos + 1]!r}") from exc
            pos += 2
        else:
            break
    for key in _ASCII_HEADER_KEYS:
        if key not in header:
            raise ParseError(f"missing ASCII grid header line: {key}")
    ncols, nrows = int(header["ncols"]), int(header["nrows"])
    if ncols <= 0 or nrows <= 0:
        raise ParseError(f"declared dimensions must be positive, got {ncols}x{nrows}")
    data_tokens = tokens[pos:]
    if len(data_tokens) != ncols * nrows:
        raise ParseError(
            f"expected {ncols * nrows} samples for {ncols}x{nrows} grid, got {len(data_tokens)}"
        )
    try:
        values = np.array(data_tokens, dtype=np.float64).reshape(nrows, ncols)
    except ValueError as exc:
        raise ParseError(f"non-numeric sample in grid body: {exc}") from exc
    if "nodata_value" in header:
        values[values == header["nodata_value"]] = np.nan
    return values, float(header["cellsize"])


def parse_raw_header(text: str) -> tuple[int, int, float]:
    """Parse the sidecar header for raw float32 elevation payloads."""
    fields: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.replace("=", " ").split()
        if len(parts) != 2:
            raise ParseError(f"bad sidecar header line: {line!r}")
        fields[parts[0].lower()] = parts[1]
    try:
        width = int(fields["width"])
        height = int(fields["height"])
        cell_size = float(fields.get("cell_size", "1.0"))
    except KeyError as exc:
        raise ParseError(f"sidecar header missing field: {exc}") from exc
    except ValueError as exc:
        raise ParseError(f"bad sidecar header value: {exc}") from exc
    if width <= 0 or height <= 0:
        raise ParseError(f"declared dimensions must be positive, got {width}x{height}")
    return width, height, cell_size


def _parse_raw_f32(payload: bytes, header: str) -> tuple[np.ndarray, float]:
    width, height, cell_size = parse_raw_header(header)
    expected = width * height * 4
    if len(payload) != expected:
        raise ParseError(
            f"raw payload is {len(payload)} bytes, expected {expected} for {width}x{height} float32"
        )
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(height, width)
    return values, cell_size


def fill_nodata_nearest(values: np.ndarray) -> np.ndarray:
    """Replace NaN cells with the value of the nearest finite cell."""
    from scipy import ndimage

    values = np.asarray(values, dtype=np.float64)
    missing = ~np.isfinite(values)
    if not missing.any():
        return values.copy()
    if missing.all():
        raise NoDataPresent("every cell is NODATA; nothing to fill from")
    idx = ndimage.distance_transform_edt(missing, return_distances=False, return_indices=True)
    return values[tuple(idx)]


def load_dem(data: bytes, fmt: str, header: str | None = None, fill_nodata: bool = False) -> DemGrid:
    """Load an elevation raster.

    ``fmt`` is ``"ascii"`` (ESRI ASCII grid) or ``"raw"`` (little-endian
    float32 payload; ``header`` must carry the sidecar text). NODATA cells
    raise :class:`NoDataPresent` unless ``fill_nodata`` requests the
    nearest-neighbor pre-fill pass.
    """
    if fmt == "ascii":
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"ASCII grid is not valid UTF-8: {exc}") from exc
        values, cell_size = _parse_ascii_grid(text)
    elif fmt == "raw":
        if header is None:
            raise ParseError("raw format requires the sidecar header text")
        values, cell_size = _parse_raw_f32(data, header)
    else:
        raise ParseError(f"unknown elevation format: {fmt!r}")

    if values.shape[0] < 2 or values.shape[1] < 2:
        raise DimensionMismatch(
            f"grid must be at least 2x2, got {values.shape[1]}x{values.shape[0]}"
        )
    if not np.isfinite(values).all():
        if not fill_nodata:
            raise NoDataPresent(
                f"{int((~np.isfinite(values)).sum())} NODATA cells present; "
                "pre-fill (e.g. fill_nodata_nearest) before use"
            )
        values = fill_nodata_nearest(values)
    return DemGrid(values, cell_size=cell_size)


def save_dem_raw(grid: DemGrid) -> tuple[bytes, str]:
    """Serialize a grid to (raw little-endian float32 payload, sidecar header)."""
    payload = np.ascontiguousarray(grid.values, dtype="<f4").tobytes()
    header = f"width {grid.width}\nheight {grid.height}\ncell_size {grid.cell_size!r}\n"
    return payload, header


def save_dem_ascii(grid: DemGrid) -> bytes:
    """Serialize a grid as an ESRI ASCII grid (no NODATA line; all cells finite)."""
    lines = [
        f"ncols {grid.width}",
        f"nrows {grid.height}",
        "xllcorner 0.0",
        "yllcorner 0.0",
        f"cellsize {grid.cell_size!r}",
    ]
    for row in grid.values:
        lines.append(" ".join(repr(float(v)) for v in row))
    return ("\n".join(lines) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# normalization and alignment
# ---------------------------------------------------------------------------

def normalize(grid: DemGrid) -> NormalizedField:
    """Affinely rescale elevations to [0, 1].

    A constant grid has zero range; it maps to all zeros with the degenerate
    flag set rather than failing.
    """
    lo, hi = grid.min_value, grid.max_value
    if hi > lo:
        f = (grid.values - lo) / (hi - lo)
        return NormalizedField(f, source_range=(lo, hi))
    return NormalizedField(
        np.zeros_like(grid.values), source_range=(lo, hi), degenerate=True
    )


def check_alignment(dem: DemGrid, other: RgbRaster | AnnotationMask | NormalizedField) -> None:
    """Require pixel-perfect alignment (identical shapes); raise otherwise."""
    if dem.shape != other.shape:
        raise DimensionMismatch(
            f"elevation is {dem.width}x{dem.height} but companion raster is "
            f"{other.shape[1]}x{other.shape[0]}"
        )


# ---------------------------------------------------------------------------
# mask and imagery files
# ---------------------------------------------------------------------------

def save_mask(mask: AnnotationMask) -> bytes:
    """Encode a mask as a single-channel 8-bit PNG (lossless, bit-exact)."""
    img = Image.fromarray(mask.labels, mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def load_mask(data: bytes) -> AnnotationMask:
    """Decode a single-channel PNG mask; values outside {0,1,2} are rejected."""
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise ParseError(f"mask payload is not a decodable image: {exc}") from exc
    if img.mode != "L":
        raise ParseError(f"mask PNG must be single-channel 8-bit (mode L), got {img.mode}")
    arr = np.asarray(img, dtype=np.uint8)
    if arr.size and arr.max() > DRY:
        raise IllegalLabelValue(
            f"mask contains value {int(arr.max())}, legal values are 0/1/2"
        )
    return AnnotationMask(arr)


def mask_from_rgba(data: bytes) -> AnnotationMask:
    """Import the red/blue translucent annotation texture as a mask.

    Transparent pixels are unlabeled; otherwise red-dominant means flooded and
    blue-dominant means dry. Red/blue ties stay unlabeled.
    """
    try:
        img = Image.open(io.BytesIO(data)).convert("RGBA")
    except Exception as exc:
        raise ParseError(f"texture payload is not a decodable image: {exc}") from exc
    arr = np.asarray(img, dtype=np.uint8)
    r, b, a = arr[..., 0].astype(np.int16), arr[..., 2].astype(np.int16), arr[..., 3]
    labels = np.zeros(arr.shape[:2], dtype=np.uint8)
    opaque = a > 0
    labels[opaque & (r > b)] = FLOODED
    labels[opaque & (b > r)] = DRY
    return AnnotationMask(labels)


def save_imagery(raster: RgbRaster) -> bytes:
    img = Image.fromarray(raster.pixels, mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def load_imagery(data: bytes) -> RgbRaster:
    try:
        img = Image.open(io.BytesIO(data)).convert("RGB")
    except Exception as exc:
        raise ParseError(f"imagery payload is not a decodable image: {exc}") from exc
    return RgbRaster(np.asarray(img, dtype=np.uint8))
