import { describe, expect, it } from "vitest";

import {
  applyAction,
  loadCheckpoint,
  newSession,
  replay,
  saveCheckpoint,
  type EngineContext,
} from "../src/engine";
import { HeaderMismatch, InvalidAction, ParseError } from "../src/errors";
import {
  BRUSH,
  CLASS_DRY,
  DRY,
  ERASE,
  FLOODED,
  POINT_BFS,
  REDO,
  SEGMENT_PICK,
  SET_LABEL_CLASS,
  SET_LEVEL,
  SET_MODE,
  UNDO,
} from "../src/labels";
import type { Segmentation } from "../src/segmentation";
import {
  appendAction,
  logFromJson,
  logToJson,
  newLog,
  type ActionRecord,
} from "../src/session";
import { makeField } from "./helpers";

// 4x4 ramp: BFS from a corner is predictable, segment level 0 splits the
// grid into left/right halves, level 1 is a single segment
function testContext(): EngineContext {
  const rows = [
    [0.0, 0.1, 0.2, 0.3],
    [0.1, 0.2, 0.3, 0.4],
    [0.2, 0.3, 0.4, 0.5],
    [0.3, 0.4, 0.5, 0.6],
  ];
  const ids0 = Uint32Array.from([0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1]);
  const levels: Segmentation[] = [
    { width: 4, height: 4, segmentCount: 2, ids: ids0 },
    { width: 4, height: 4, segmentCount: 1, ids: new Uint32Array(16) },
  ];
  return {
    datasetId: "t1",
    field: makeField(rows),
    thresholds: [0.0, 0.5],
    getLevel: (level) => levels[level],
    connectivity: 4,
  };
}

function act(seq: number, kind: ActionRecord["kind"], params: Record<string, unknown>): ActionRecord {
  return { seq, t_ms: seq * 10, kind, params };
}

describe("wire format", () => {
  it("serializes params in sorted key order after seq/t_ms/kind", () => {
    const ctx = testContext();
    const log = newLog(ctx.datasetId, 4, 4, ctx.thresholds);
    appendAction(log, act(1, BRUSH, { side: 3, center: [1, 1] }));
    const text = logToJson(log);
    expect(text).toContain('{"seq":1,"t_ms":10,"kind":"brush","center":[1,1],"side":3}');
    const parsed = logFromJson(text);
    expect(parsed.actions[0].params).toEqual({ center: [1, 1], side: 3 });
    expect(logToJson(parsed)).toBe(text);
  });

  it("rejects malformed documents", () => {
    expect(() => logFromJson("not json")).toThrow(ParseError);
    expect(() => logFromJson("[1,2]")).toThrow(ParseError);
    expect(() => logFromJson('{"header":{},"actions":[],"extra":1}')).toThrow(ParseError);
  });

  it("rejects header problems", () => {
    const ctx = testContext();
    const log = newLog(ctx.datasetId, 4, 4, ctx.thresholds);
    const doc = JSON.parse(logToJson(log));
    const broken = (mutate: (d: Record<string, unknown>) => void) => {
      const copy = JSON.parse(JSON.stringify(doc));
      mutate(copy);
      return JSON.stringify(copy);
    };
    expect(() => logFromJson(broken((d) => ((d.header as never as { version: number }).version = 2)))).toThrow(
      ParseError,
    );
    expect(() => logFromJson(broken((d) => delete (d.header as Record<string, unknown>).width))).toThrow(
      ParseError,
    );
    expect(() =>
      logFromJson(broken((d) => (((d.header as Record<string, unknown>).thresholds) = ["a"]))),
    ).toThrow(ParseError);
  });

  it("rejects unknown kinds, extra fields, and missing fields", () => {
    const base = {
      header: { dataset_id: "t1", width: 4, height: 4, thresholds: [0], version: 1 },
      actions: [] as unknown[],
    };
    const withAction = (a: unknown) => JSON.stringify({ ...base, actions: [a] });
    expect(() => logFromJson(withAction({ seq: 1, t_ms: 0, kind: "paint" }))).toThrow(
      InvalidAction,
    );
    expect(() => logFromJson(withAction({ seq: 1, t_ms: 0, kind: "toString" }))).toThrow(
      InvalidAction,
    );
    expect(() =>
      logFromJson(withAction({ seq: 1, t_ms: 0, kind: "undo", extra: 1 })),
    ).toThrow(InvalidAction);
    expect(() =>
      logFromJson(withAction({ seq: 1, t_ms: 0, kind: "brush", center: [0, 0] })),
    ).toThrow(InvalidAction);
    expect(() => logFromJson(withAction({ seq: 1, t_ms: -5, kind: "undo" }))).toThrow(
      InvalidAction,
    );
    expect(() => logFromJson(withAction({ seq: true, t_ms: 0, kind: "undo" }))).toThrow(
      InvalidAction,
    );
  });

  it("rejects non-increasing sequence numbers", () => {
    const text = JSON.stringify({
      header: { dataset_id: "t1", width: 4, height: 4, thresholds: [0], version: 1 },
      actions: [
        { seq: 2, t_ms: 0, kind: "undo" },
        { seq: 2, t_ms: 1, kind: "redo" },
      ],
    });
    expect(() => logFromJson(text)).toThrow(InvalidAction);
    const ctx = testContext();
    const log = newLog(ctx.datasetId, 4, 4, ctx.thresholds);
    appendAction(log, act(5, UNDO, {}));
    expect(() => appendAction(log, act(5, REDO, {}))).toThrow(InvalidAction);
  });
});

describe("engine", () => {
  it("brush fills a clamped square and erase clears it", () => {
    const ctx = testContext();
    const state = newSession(ctx);
    applyAction(state, act(1, BRUSH, { center: [0, 0], side: 3 }), ctx);
    // 3x3 centered at the corner clamps to 2x2
    expect([...state.mask]).toEqual([1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
    applyAction(state, act(2, SET_MODE, { mode: ERASE }), ctx);
    applyAction(state, act(3, BRUSH, { center: [0, 0], side: 3 }), ctx);
    expect(state.mask.every((v) => v === 0)).toBe(true);
  });

  it("label class picks the BFS direction and written code", () => {
    const ctx = testContext();
    const state = newSession(ctx);
    applyAction(state, act(1, POINT_BFS, { seed: [3, 3], tolerance: 0 }), ctx);
    // flooded = downstream: from the top of the ramp everything drains
    expect(state.mask.every((v) => v === FLOODED)).toBe(true);
    applyAction(state, act(2, SET_LABEL_CLASS, { label_class: CLASS_DRY }), ctx);
    applyAction(state, act(3, POINT_BFS, { seed: [0, 0], tolerance: 0 }), ctx);
    expect(state.mask.every((v) => v === DRY)).toBe(true);
  });

  it("segment pick paints the picked id at the current level", () => {
    const ctx = testContext();
    const state = newSession(ctx);
    applyAction(state, act(1, SEGMENT_PICK, { pixel: [0, 3], level: 0 }), ctx);
    const painted = [...state.mask.keys()].filter((i) => state.mask[i] === FLOODED);
    expect(painted).toEqual([2, 3, 6, 7, 10, 11, 14, 15]);
    applyAction(state, act(2, SEGMENT_PICK, { pixel: [0, 0], level: 1 }), ctx);
    expect(state.mask.every((v) => v === FLOODED)).toBe(true);
  });

  it("every mutating action pushes a patch, even an empty one", () => {
    const ctx = testContext();
    const state = newSession(ctx);
    applyAction(state, act(1, BRUSH, { center: [1, 1], side: 1 }), ctx);
    applyAction(state, act(2, BRUSH, { center: [1, 1], side: 1 }), ctx);
    expect(state.undoStack.length).toBe(2);
    expect(state.undoStack[1]).toEqual([]);
    applyAction(state, act(3, UNDO, {}), ctx);
    expect(state.mask[5]).toBe(FLOODED); // empty patch undone, pixel still set
    applyAction(state, act(4, UNDO, {}), ctx);
    expect(state.mask[5]).toBe(0);
  });

  it("undo/redo round-trips and mutation clears redo", () => {
    const ctx = testContext();
    const state = newSession(ctx);
    applyAction(state, act(1, BRUSH, { center: [1, 1], side: 3 }), ctx);
    const after = Uint8Array.from(state.mask);
    applyAction(state, act(2, UNDO, {}), ctx);
    expect(state.mask.every((v) => v === 0)).toBe(true);
    applyAction(state, act(3, REDO, {}), ctx);
    expect([...state.mask]).toEqual([...after]);
    applyAction(state, act(4, UNDO, {}), ctx);
    applyAction(state, act(5, BRUSH, { center: [3, 3], side: 1 }), ctx);
    expect(state.redoStack.length).toBe(0);
    applyAction(state, act(6, REDO, {}), ctx); // silent no-op
    expect(state.mask[15]).toBe(FLOODED);
    expect(state.mask[5]).toBe(0);
  });

  it("level changes never mutate the mask", () => {
    const ctx = testContext();
    const state = newSession(ctx);
    applyAction(state, act(1, BRUSH, { center: [2, 2], side: 3 }), ctx);
    const before = Uint8Array.from(state.mask);
    applyAction(state, act(2, SET_LEVEL, { level: 1 }), ctx);
    applyAction(state, act(3, SET_LEVEL, { level: 0 }), ctx);
    expect([...state.mask]).toEqual([...before]);
    expect(state.undoStack.length).toBe(1);
  });

  it("validates setter values and level range", () => {
    const ctx = testContext();
    const state = newSession(ctx);
    expect(() => applyAction(state, act(1, SET_LEVEL, { level: 2 }), ctx)).toThrow(
      InvalidAction,
    );
    expect(() => applyAction(state, act(1, SET_LEVEL, { level: -1 }), ctx)).toThrow(
      InvalidAction,
    );
    expect(() =>
      applyAction(state, act(1, SET_LABEL_CLASS, { label_class: "wet" }), ctx),
    ).toThrow(InvalidAction);
    expect(() => applyAction(state, act(1, SET_MODE, { mode: "paint" }), ctx)).toThrow(
      InvalidAction,
    );
    expect(() =>
      applyAction(state, act(1, BRUSH, { center: [9, 0], side: 1 }), ctx),
    ).toThrow();
    expect(() =>
      applyAction(state, act(1, POINT_BFS, { seed: [0, 0], tolerance: -1 }), ctx),
    ).toThrow(InvalidAction);
  });

  it("replay rejects logs for a different dataset shape", () => {
    const ctx = testContext();
    expect(() => replay(newLog("t1", 5, 4, ctx.thresholds), ctx)).toThrow(HeaderMismatch);
    expect(() => replay(newLog("other", 4, 4, ctx.thresholds), ctx)).toThrow(
      HeaderMismatch,
    );
    expect(() => replay(newLog("t1", 4, 4, [0.0]), ctx)).toThrow(HeaderMismatch);
  });

  it("checkpoint save/load resumes with the identical mask", () => {
    const ctx = testContext();
    const state = newSession(ctx);
    const log = newLog(ctx.datasetId, 4, 4, ctx.thresholds);
    const run = (seq: number, kind: ActionRecord["kind"], params: Record<string, unknown>) => {
      const a = act(seq, kind, params);
      applyAction(state, a, ctx);
      appendAction(log, a);
    };
    run(1, SEGMENT_PICK, { pixel: [0, 0], level: 0 });
    run(2, SET_LABEL_CLASS, { label_class: CLASS_DRY });
    run(3, BRUSH, { center: [2, 2], side: 3 });
    const saved = saveCheckpoint(state, log);

    const resumed = loadCheckpoint(saved, ctx);
    expect([...resumed.state.mask]).toEqual([...state.mask]);
    expect(resumed.state.labelClass).toBe(CLASS_DRY);

    // diverge both copies identically; results must stay in lockstep
    const more = act(4, UNDO, {});
    applyAction(state, more, ctx);
    applyAction(resumed.state, more, ctx);
    appendAction(resumed.log, more);
    expect([...resumed.state.mask]).toEqual([...state.mask]);
    expect(resumed.log.actions.length).toBe(4);
  });
});
