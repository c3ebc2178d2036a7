"""Contour-tree construction, persistence, and multiscale segmentation."""

from .segmentation import (
    DEFAULT_THRESHOLDS,
    MultiScaleSegmentation,
    SegmentationMap,
    build_multiscale,
    check_thresholds,
    export_segment_ids,
    parse_segmentation,
    segment_borders,
    segment_field,
    segment_pixels,
    segmentation_manifest,
)
from .trees import (
    ESSENTIAL,
    MIN_SADDLE,
    SADDLE_MAX,
    ContourTree,
    CriticalPoint,
    FieldOrder,
    MergeTree,
    PersistencePair,
    build_merge_tree,
    combine_trees,
    compute_persistence,
    simplify_tree,
)

__all__ = [
    "DEFAULT_THRESHOLDS",
    "ESSENTIAL",
    "MIN_SADDLE",
    "SADDLE_MAX",
    "ContourTree",
    "CriticalPoint",
    "FieldOrder",
    "MergeTree",
    "MultiScaleSegmentation",
    "PersistencePair",
    "SegmentationMap",
    "build_merge_tree",
    "build_multiscale",
    "check_thresholds",
    "combine_trees",
    "compute_persistence",
    "export_segment_ids",
    "parse_segmentation",
    "segment_borders",
    "segment_field",
    "segment_pixels",
    "segmentation_manifest",
    "simplify_tree",
]
