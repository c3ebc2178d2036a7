"""Elevation-guided flood-extent annotation toolkit.

Subpackages and modules:
  raster     DEM/mask/imagery formats and normalization
  topology   contour trees, persistence, multiscale segmentation
  select     monotone BFS and polygon selection tools
  mesh       greedy-insertion terrain TIN with STL/OBJ export
  aggregate  crowd fusion, soft labels, metrics, overlays
  session    action logging, deterministic replay, undo/redo
  gateway    on-disk store, HTTP service, CLI
"""

from . import aggregate, errors, mesh, raster, select, session, topology
from .errors import TopofloodError
from .raster import (
    DRY,
    FLOODED,
    UNLABELED,
    AnnotationMask,
    DemGrid,
    NormalizedField,
    load_dem,
    load_mask,
    normalize,
    save_mask,
)
from .topology import DEFAULT_THRESHOLDS, build_multiscale

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_THRESHOLDS",
    "DRY",
    "FLOODED",
    "UNLABELED",
    "AnnotationMask",
    "DemGrid",
    "NormalizedField",
    "TopofloodError",
    "aggregate",
    "build_multiscale",
    "errors",
    "load_dem",
    "load_mask",
    "mesh",
    "normalize",
    "raster",
    "save_mask",
    "select",
    "session",
    "topology",
]
