/**
 * Local session engine: applies logged actions to an in-memory mask.
 *
 * This is the client half of the replay contract. Every mutating action
 * resolves its pixel set through the ported selection tools, writes the
 * current class (fill) or Unlabeled (erase), pushes an undo patch, and
 * clears the redo stack; a mutating action always lands a patch, even an
 * empty one, so undo depth equals the number of tool actions taken. The
 * service replaying the emitted log must land on the same mask bit for bit.
 */

import { HeaderMismatch, InvalidAction, OutOfBounds, ToolError } from "./errors";
import type { Field } from "./field";
import {
  BRUSH,
  CLASS_CODE,
  CLASS_DRY,
  CLASS_FLOODED,
  DOWNSTREAM,
  ERASE,
  FILL,
  MUTATING_KINDS,
  POINT_BFS,
  POLYGON_BFS,
  REDO,
  SEGMENT_PICK,
  SET_LABEL_CLASS,
  SET_LEVEL,
  SET_MODE,
  UNDO,
  UNLABELED,
  UPSTREAM,
  type Direction,
  type LabelClass,
  type PaintMode,
} from "./labels";
import { bfsSelect, polygonBfsSelect } from "./selection";
import { segmentPixels, type Segmentation } from "./segmentation";
import { isInt, isNumber, logFromJson, logToJson, type ActionRecord, type SessionLog } from "./session";

export interface EngineContext {
  datasetId: string;
  field: Field;
  thresholds: number[];
  /** Segmentation plane per level; must cover every level a log picks from. */
  getLevel(level: number): Segmentation;
  connectivity: 4 | 8;
}

// one patch entry per changed pixel: [flat index, previous label, new label]
export type Patch = Array<[number, number, number]>;

export interface SessionState {
  mask: Uint8Array;
  labelClass: LabelClass;
  mode: PaintMode;
  level: number;
  undoStack: Patch[];
  redoStack: Patch[];
}

export function newSession(ctx: EngineContext): SessionState {
  return {
    mask: new Uint8Array(ctx.field.width * ctx.field.height),
    labelClass: CLASS_FLOODED,
    mode: FILL,
    level: 0,
    undoStack: [],
    redoStack: [],
  };
}

function needInt(seq: number, v: unknown, name: string, minimum?: number): number {
  if (!isInt(v)) {
    throw new InvalidAction(`${name} must be an integer, got ${JSON.stringify(v)}`, seq);
  }
  if (minimum !== undefined && v < minimum) {
    throw new InvalidAction(`${name} must be >= ${minimum}, got ${v}`, seq);
  }
  return v;
}

function needPair(seq: number, v: unknown, name: string): [number, number] {
  if (!Array.isArray(v) || v.length !== 2 || !v.every(isNumber)) {
    throw new InvalidAction(
      `${name} must be a pair of numbers, got ${JSON.stringify(v)}`,
      seq,
    );
  }
  return [v[0], v[1]];
}

function brushPixels(ctx: EngineContext, action: ActionRecord): Int32Array {
  const center = needPair(action.seq, action.params["center"], "center");
  const cr = needInt(action.seq, center[0], "center row");
  const cc = needInt(action.seq, center[1], "center col");
  const side = needInt(action.seq, action.params["side"], "side", 1);
  const { width: w, height: h } = ctx.field;
  if (!(cr >= 0 && cr < h && cc >= 0 && cc < w)) {
    throw new OutOfBounds(`brush center (${cr}, ${cc}) outside ${h}x${w} grid`);
  }
  const r0 = Math.max(0, cr - Math.floor((side - 1) / 2));
  const r1 = Math.min(h - 1, cr + Math.floor(side / 2));
  const c0 = Math.max(0, cc - Math.floor((side - 1) / 2));
  const c1 = Math.min(w - 1, cc + Math.floor(side / 2));
  const out = new Int32Array((r1 - r0 + 1) * (c1 - c0 + 1));
  let k = 0;
  for (let r = r0; r <= r1; r++) {
    for (let c = c0; c <= c1; c++) out[k++] = r * w + c;
  }
  return out;
}

function direction(state: SessionState): Direction {
  return state.labelClass === CLASS_FLOODED ? DOWNSTREAM : UPSTREAM;
}

function tolerance(action: ActionRecord): number {
  const tol = action.params["tolerance"];
  if (!isNumber(tol) || tol < 0) {
    throw new InvalidAction(
      `tolerance must be a non-negative number, got ${JSON.stringify(tol)}`,
      action.seq,
    );
  }
  return tol;
}

function selectionPixels(
  state: SessionState,
  ctx: EngineContext,
  action: ActionRecord,
): Int32Array {
  if (action.kind === BRUSH) return brushPixels(ctx, action);
  if (action.kind === POINT_BFS) {
    const seed = needPair(action.seq, action.params["seed"], "seed");
    const r = needInt(action.seq, seed[0], "seed row");
    const c = needInt(action.seq, seed[1], "seed col");
    return bfsSelect(ctx.field, [r, c], direction(state), tolerance(action), ctx.connectivity);
  }
  if (action.kind === POLYGON_BFS) {
    const verts = action.params["vertices"];
    if (!Array.isArray(verts) || verts.length < 3) {
      throw new InvalidAction(
        `vertices must list at least 3 points, got ${JSON.stringify(verts)}`,
        action.seq,
      );
    }
    const pts = verts.map((p) => needPair(action.seq, p, "vertex"));
    return polygonBfsSelect(ctx.field, pts, direction(state), tolerance(action), ctx.connectivity);
  }
  // SEGMENT_PICK
  const pixel = needPair(action.seq, action.params["pixel"], "pixel");
  const r = needInt(action.seq, pixel[0], "pixel row");
  const c = needInt(action.seq, pixel[1], "pixel col");
  const level = needInt(action.seq, action.params["level"], "level", 0);
  return segmentPixels(ctx.getLevel(level), [r, c]);
}

function applyPixels(state: SessionState, pixels: Int32Array): void {
  const newVal = state.mode === FILL ? CLASS_CODE[state.labelClass] : UNLABELED;
  const patch: Patch = [];
  for (let i = 0; i < pixels.length; i++) {
    const p = pixels[i];
    const prev = state.mask[p];
    if (prev !== newVal) {
      patch.push([p, prev, newVal]);
      state.mask[p] = newVal;
    }
  }
  state.undoStack.push(patch);
  state.redoStack.length = 0;
}

export function applyAction(
  state: SessionState,
  action: ActionRecord,
  ctx: EngineContext,
): SessionState {
  const kind = action.kind;
  if ((MUTATING_KINDS as readonly string[]).includes(kind)) {
    applyPixels(state, selectionPixels(state, ctx, action));
    return state;
  }
  if (kind === SET_LEVEL) {
    const level = needInt(action.seq, action.params["level"], "level", 0);
    if (level >= ctx.thresholds.length) {
      throw new InvalidAction(
        `level ${level} out of range [0, ${ctx.thresholds.length})`,
        action.seq,
      );
    }
    state.level = level;
    return state;
  }
  if (kind === SET_LABEL_CLASS) {
    const value = action.params["label_class"];
    if (value !== CLASS_FLOODED && value !== CLASS_DRY) {
      throw new InvalidAction(
        `label_class must be 'flooded' or 'dry', got ${JSON.stringify(value)}`,
        action.seq,
      );
    }
    state.labelClass = value;
    return state;
  }
  if (kind === SET_MODE) {
    const value = action.params["mode"];
    if (value !== FILL && value !== ERASE) {
      throw new InvalidAction(
        `mode must be 'fill' or 'erase', got ${JSON.stringify(value)}`,
        action.seq,
      );
    }
    state.mode = value;
    return state;
  }
  if (kind === UNDO) return undo(state);
  if (kind === REDO) return redo(state);
  throw new InvalidAction(`unknown action kind '${kind}'`, action.seq);
}

/** Revert the most recent patch; silent no-op on an empty stack. */
export function undo(state: SessionState): SessionState {
  const patch = state.undoStack.pop();
  if (patch === undefined) return state;
  for (let i = patch.length - 1; i >= 0; i--) {
    state.mask[patch[i][0]] = patch[i][1];
  }
  state.redoStack.push(patch);
  return state;
}

/** Reapply the most recently undone patch; no-op on an empty stack. */
export function redo(state: SessionState): SessionState {
  const patch = state.redoStack.pop();
  if (patch === undefined) return state;
  for (const [pixel, , next] of patch) {
    state.mask[pixel] = next;
  }
  state.undoStack.push(patch);
  return state;
}

export function checkHeader(log: SessionLog, ctx: EngineContext): void {
  const { width: w, height: h } = ctx.field;
  if (log.width !== w || log.height !== h) {
    throw new HeaderMismatch(`log is ${log.width}x${log.height}, dataset is ${w}x${h}`);
  }
  if (log.dataset_id !== ctx.datasetId) {
    throw new HeaderMismatch(
      `log dataset '${log.dataset_id}' does not match '${ctx.datasetId}'`,
    );
  }
  if (
    log.thresholds.length !== ctx.thresholds.length ||
    log.thresholds.some((t, i) => t !== ctx.thresholds[i])
  ) {
    throw new HeaderMismatch(
      `log thresholds ${JSON.stringify(log.thresholds)} do not match dataset`,
    );
  }
}

/** Fold the whole log over a fresh session, validating as it goes. */
export function replayState(log: SessionLog, ctx: EngineContext): SessionState {
  checkHeader(log, ctx);
  const state = newSession(ctx);
  let last: number | null = null;
  for (const action of log.actions) {
    if (last !== null && action.seq <= last) {
      throw new InvalidAction(
        `seq ${action.seq} not greater than previous ${last}`,
        action.seq,
      );
    }
    last = action.seq;
    try {
      applyAction(state, action, ctx);
    } catch (exc) {
      if (exc instanceof InvalidAction) {
        throw exc.seq === null ? new InvalidAction(exc.message, action.seq) : exc;
      }
      if (exc instanceof ToolError) {
        throw new InvalidAction(`action ${action.seq} failed: ${exc.message}`, action.seq);
      }
      throw exc;
    }
  }
  return state;
}

export function replay(log: SessionLog, ctx: EngineContext): Uint8Array {
  return replayState(log, ctx).mask;
}

/** Serialize the session; the log alone reconstructs the state. */
export function saveCheckpoint(_state: SessionState, log: SessionLog): string {
  return logToJson(log);
}

export function loadCheckpoint(
  text: string,
  ctx: EngineContext,
): { state: SessionState; log: SessionLog } {
  const log = logFromJson(text);
  return { state: replayState(log, ctx), log };
}
