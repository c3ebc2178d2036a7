"""Arc-based segmentation of a scalar field at multiple persistence levels."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import BadThresholds, FieldMismatch, OutOfBounds, ParseError
from ..raster import NormalizedField
from .trees import (
    ContourTree,
    FieldOrder,
    PersistencePair,
    build_merge_tree,
    combine_trees,
    compute_persistence,
    simplify_tree,
)

DEFAULT_THRESHOLDS = (0.0, 0.01, 0.02, 0.04, 0.08, 0.16)


@dataclass(frozen=True)
class SegmentationMap:
    """Pixel-to-segment labels at one persistence level.

    ``segment_ids`` is (height, width) int32 with every value in
    [0, segment_count). Ids follow the canonical arc order of the simplified
    contour tree: ascending (lower endpoint value, lower endpoint index).
    """

    epsilon: float
    segment_ids: np.ndarray
    segment_count: int

    def __post_init__(self):
        ids = self.segment_ids
        if ids.ndim != 2 or ids.dtype != np.int32:
            raise ValueError("segment_ids must be a 2D int32 array")

    @property
    def shape(self) -> tuple[int, int]:
        return self.segment_ids.shape


@dataclass
class MultiScaleSegmentation:
    """Segmentations of one field at an increasing ladder of epsilon levels.

    Level maps are nested: merging only ever joins segments as epsilon grows.
    ``trees`` keeps the simplified contour tree per level so callers can add
    further levels without recomputing the sweeps.
    """

    field: NormalizedField
    levels: list[SegmentationMap]
    trees: list[ContourTree]
    pairs: list[PersistencePair]

    @property
    def thresholds(self) -> tuple[float, ...]:
        return tuple(m.epsilon for m in self.levels)

    def level(self, index: int) -> SegmentationMap:
        if not 0 <= index < len(self.levels):
            raise OutOfBounds(
                f"level {index} out of range [0, {len(self.levels)})"
            )
        return self.levels[index]

    def add_level(self, epsilon: float) -> SegmentationMap:
        """Append a coarser level; epsilon must exceed the current maximum."""
        if epsilon <= self.levels[-1].epsilon:
            raise BadThresholds(
                f"new level {epsilon} must exceed current maximum "
                f"{self.levels[-1].epsilon}"
            )
        tree = simplify_tree(self.trees[-1], self.pairs, epsilon)
        seg = segment_field(tree)
        self.levels.append(seg)
        self.trees.append(tree)
        return seg


def check_thresholds(thresholds) -> tuple[float, ...]:
    ladder = tuple(float(t) for t in thresholds)
    if not ladder:
        raise BadThresholds("threshold ladder is empty")
    if ladder[0] != 0.0:
        raise BadThresholds(f"first threshold must be 0, got {ladder[0]}")
    for a, b in zip(ladder, ladder[1:]):
        if b <= a:
            raise BadThresholds(
                f"thresholds must be strictly increasing, got {a} then {b}"
            )
    return ladder


def segment_field(tree: ContourTree, field=None) -> SegmentationMap:
    """Segmentation induced by the arcs of a (possibly simplified) tree.

    ``field``, if given, must be the field the tree was built over; passing a
    different one raises FieldMismatch.
    """
    order = tree.order
    if field is not None and (
        field.shape != order.values.shape
        or not np.array_equal(field.f, order.values)
    ):
        raise FieldMismatch("tree was built over a different field")
    ids = tree.arc_of.reshape(order.height, order.width)
    return SegmentationMap(
        epsilon=tree.epsilon,
        segment_ids=np.ascontiguousarray(ids),
        segment_count=tree.arc_count,
    )


def build_multiscale(
    field: NormalizedField, thresholds=DEFAULT_THRESHOLDS
) -> MultiScaleSegmentation:
    """Contour-tree segmentation of a normalized field at every threshold.

    Levels above 0 are obtained by simplifying the previous level further,
    which both avoids rework and makes the nesting property structural.
    A degenerate (constant) field yields a single whole-image segment per
    level.
    """
    ladder = check_thresholds(thresholds)
    h, w = field.f.shape
    if field.degenerate:
        ids = np.zeros((h, w), dtype=np.int32)
        levels = [
            SegmentationMap(epsilon=e, segment_ids=ids, segment_count=1)
            for e in ladder
        ]
        return MultiScaleSegmentation(field=field, levels=levels, trees=[], pairs=[])
    order = FieldOrder(field.f)
    join = build_merge_tree(order, "join")
    split = build_merge_tree(order, "split")
    base = combine_trees(join, split)
    pairs = compute_persistence(join, split)
    levels = []
    trees = []
    tree = base
    for eps in ladder:
        tree = simplify_tree(tree, pairs, eps)
        trees.append(tree)
        levels.append(segment_field(tree))
    return MultiScaleSegmentation(field=field, levels=levels, trees=trees, pairs=pairs)


def segment_pixels(seg: SegmentationMap, pixel: tuple[int, int]) -> np.ndarray:
    """Sorted flat indices of the segment containing ``pixel`` (row, col)."""
    h, w = seg.shape
    r, c = int(pixel[0]), int(pixel[1])
    if not (0 <= r < h and 0 <= c < w):
        raise OutOfBounds(f"pixel ({r}, {c}) outside {h}x{w} grid")
    sid = seg.segment_ids[r, c]
    return np.flatnonzero(seg.segment_ids.ravel() == sid)


def segment_borders(seg: SegmentationMap) -> np.ndarray:
    """Boolean mask of pixels with a 4-neighbor in a different segment."""
    ids = seg.segment_ids
    border = np.zeros(ids.shape, dtype=bool)
    diff = ids[1:, :] != ids[:-1, :]
    border[1:, :] |= diff
    border[:-1, :] |= diff
    diff = ids[:, 1:] != ids[:, :-1]
    border[:, 1:] |= diff
    border[:, :-1] |= diff
    return border


def export_segment_ids(seg: SegmentationMap) -> bytes:
    """Raw little-endian uint32 pixel labels, row-major."""
    return np.ascontiguousarray(seg.segment_ids, dtype="<u4").tobytes()


def segmentation_manifest(seg: SegmentationMap) -> dict:
    h, w = seg.shape
    return {
        "epsilon": seg.epsilon,
        "segment_count": seg.segment_count,
        "width": w,
        "height": h,
    }


def parse_segmentation(payload: bytes, manifest: dict | str) -> SegmentationMap:
    """Inverse of export_segment_ids + segmentation_manifest."""
    if isinstance(manifest, str):
        try:
            manifest = json.loads(manifest)
        except json.JSONDecodeError as exc:
            raise ParseError(f"segmentation manifest is not valid JSON: {exc}") from exc
    try:
        w = int(manifest["width"])
        h = int(manifest["height"])
        eps = float(manifest["epsilon"])
        count = int(manifest["segment_count"])
    except KeyError as exc:
        raise ParseError(f"segmentation manifest missing field {exc}") from exc
    expected = w * h * 4
    if len(payload) != expected:
        raise ParseError(
            f"segment id payload is {len(payload)} bytes, expected {expected}"
        )
    ids = np.frombuffer(payload, dtype="<u4").reshape(h, w).astype(np.int32)
    return SegmentationMap(epsilon=eps, segment_ids=ids, segment_count=count)
