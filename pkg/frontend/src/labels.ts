/**
 * Shared constants mirrored from the annotation backend.
 *
 * The numeric label codes, action kind strings, and overlay colors here must
 * stay byte-for-byte in sync with the service; the parity test suite checks
 * the observable consequences (replayed masks and rendered overlays), so a
 * drift in any of these shows up as a hard failure rather than a subtle
 * rendering difference.
 */

export const UNLABELED = 0;
export const FLOODED = 1;
export const DRY = 2;

export const SCHEMA_VERSION = 1;

export const BRUSH = "brush";
export const POINT_BFS = "point_bfs";
export const POLYGON_BFS = "polygon_bfs";
export const SEGMENT_PICK = "segment_pick";
export const SET_LEVEL = "set_level";
export const SET_LABEL_CLASS = "set_label_class";
export const SET_MODE = "set_mode";
export const UNDO = "undo";
export const REDO = "redo";

export type ActionKind =
  | typeof BRUSH
  | typeof POINT_BFS
  | typeof POLYGON_BFS
  | typeof SEGMENT_PICK
  | typeof SET_LEVEL
  | typeof SET_LABEL_CLASS
  | typeof SET_MODE
  | typeof UNDO
  | typeof REDO;

export const MUTATING_KINDS: readonly ActionKind[] = [
  BRUSH,
  POINT_BFS,
  POLYGON_BFS,
  SEGMENT_PICK,
];

export const FILL = "fill";
export const ERASE = "erase";
export const CLASS_FLOODED = "flooded";
export const CLASS_DRY = "dry";

export type LabelClass = typeof CLASS_FLOODED | typeof CLASS_DRY;
export type PaintMode = typeof FILL | typeof ERASE;

export const CLASS_CODE: Record<LabelClass, number> = {
  [CLASS_FLOODED]: FLOODED,
  [CLASS_DRY]: DRY,
};

// allowed parameter keys per action kind; parsing rejects anything else
export const PARAM_KEYS: Record<ActionKind, readonly string[]> = {
  [BRUSH]: ["center", "side"],
  [POINT_BFS]: ["seed", "tolerance"],
  [POLYGON_BFS]: ["vertices", "tolerance"],
  [SEGMENT_PICK]: ["pixel", "level"],
  [SET_LEVEL]: ["level"],
  [SET_LABEL_CLASS]: ["label_class"],
  [SET_MODE]: ["mode"],
  [UNDO]: [],
  [REDO]: [],
};

export const DOWNSTREAM = "downstream";
export const UPSTREAM = "upstream";
export type Direction = typeof DOWNSTREAM | typeof UPSTREAM;

// endpoint colors of the overlay blends (white toward these)
export const FLOOD_COLOR: readonly [number, number, number] = [255, 0, 0];
export const DRY_COLOR: readonly [number, number, number] = [0, 0, 255];
export const VARIANCE_HIGHLIGHT: readonly [number, number, number] = [255, 128, 0];

export const AGGREGATE_VIEW = "aggregate";
export const VARIANCE_VIEW = "variance";
export type OverlayView = typeof AGGREGATE_VIEW | typeof VARIANCE_VIEW;
