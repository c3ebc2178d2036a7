"""Exception types shared across the package.

Every error that can cross a module boundary has a named class here so that
callers (and the CLI/service layer) can report failures by name.
"""


class TopofloodError(Exception):
    """Base class for all package errors."""


# -- raster ingestion ------------------------------------------------------

class ParseError(TopofloodError):
    """Payload could not be parsed in the declared format."""


class NoDataPresent(TopofloodError):
    """Raster contains NODATA/NaN cells; caller must pre-fill them."""


class DimensionMismatch(TopofloodError):
    """Two rasters that must be pixel-aligned have different shapes."""


class IllegalLabelValue(TopofloodError):
    """Annotation mask payload contains a byte outside {0, 1, 2}."""


# -- topology engine -------------------------------------------------------

class DegenerateField(TopofloodError):
    """Field is constant; merge trees are undefined."""


class FieldMismatch(TopofloodError):
    """Trees passed to a combine/pairing step were built over different fields."""


class BadThresholds(TopofloodError):
    """Persistence threshold list is not strictly increasing from 0."""


# -- selection tools -------------------------------------------------------

class OutOfBounds(TopofloodError):
    """Pixel coordinate falls outside the raster."""


class TooFewVertices(TopofloodError):
    """Polygon needs at least three vertices."""


# -- meshing ---------------------------------------------------------------

class BadParams(TopofloodError):
    """Mesh construction parameters out of range."""


# -- aggregation -----------------------------------------------------------

class ViewMismatch(TopofloodError):
    """Overlay spec view does not match the map kind handed in."""


class NoOverlap(TopofloodError):
    """Prediction and reference share no jointly labeled pixels."""


# -- session replay --------------------------------------------------------

class InvalidAction(TopofloodError):
    """Action record is malformed or not applicable to the session context."""

    def __init__(self, message: str, seq: int | None = None):
        super().__init__(message if seq is None else f"action seq={seq}: {message}")
        self.seq = seq


class HeaderMismatch(TopofloodError):
    """Session log header disagrees with the dataset context."""


# -- gateway ---------------------------------------------------------------

class UnknownDataset(TopofloodError):
    """No dataset with the given id exists in the store."""


class ReplayMismatch(TopofloodError):
    """Submitted mask differs from the replay of the submitted log."""


class NoSubmissions(TopofloodError):
    """Aggregation requested on a dataset without any submission."""


class StorageFull(TopofloodError):
    """Dataset store could not persist an artifact."""
