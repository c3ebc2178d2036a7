/**
 * Session log records and their strict JSON wire format.
 *
 * The log schema is shared with the replay service: a header object
 * {dataset_id, width, height, thresholds, version} plus an actions array
 * whose entries carry seq, t_ms, kind, and the kind's exact parameter keys.
 * Serialization puts params in sorted key order after the fixed triple so a
 * log round-trips identically however it was built. Unknown fields or kinds
 * are rejected rather than ignored.
 *
 * One caveat of the platform: JSON.parse collapses "3.0" to the integer 3,
 * so a foreign log carrying float-typed integers passes the integer checks
 * here that the service would reject. Logs this UI emits only ever contain
 * true integers, so emitted logs validate identically on both sides.
 */

import { InvalidAction, ParseError } from "./errors";
import { PARAM_KEYS, SCHEMA_VERSION, type ActionKind } from "./labels";

export interface ActionRecord {
  seq: number;
  t_ms: number;
  kind: ActionKind;
  params: Record<string, unknown>;
}

export interface SessionLog {
  dataset_id: string;
  width: number;
  height: number;
  thresholds: number[];
  actions: ActionRecord[];
  version: number;
}

export function newLog(
  datasetId: string,
  width: number,
  height: number,
  thresholds: readonly number[],
): SessionLog {
  return {
    dataset_id: datasetId,
    width,
    height,
    thresholds: [...thresholds],
    actions: [],
    version: SCHEMA_VERSION,
  };
}

export function appendAction(log: SessionLog, action: ActionRecord): void {
  const last = log.actions[log.actions.length - 1];
  if (last !== undefined && action.seq <= last.seq) {
    throw new InvalidAction(
      `seq ${action.seq} not greater than previous ${last.seq}`,
      action.seq,
    );
  }
  log.actions.push(action);
}

function actionToWire(action: ActionRecord): Record<string, unknown> {
  const out: Record<string, unknown> = {
    seq: action.seq,
    t_ms: action.t_ms,
    kind: action.kind,
  };
  for (const key of Object.keys(action.params).sort()) {
    out[key] = action.params[key];
  }
  return out;
}

export function logToJson(log: SessionLog): string {
  return JSON.stringify({
    header: {
      dataset_id: log.dataset_id,
      width: log.width,
      height: log.height,
      thresholds: log.thresholds,
      version: log.version,
    },
    actions: log.actions.map(actionToWire),
  });
}

export function isNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

export function isInt(v: unknown): v is number {
  return typeof v === "number" && Number.isInteger(v);
}

function sameKeys(obj: object, expected: readonly string[]): boolean {
  const keys = Object.keys(obj);
  return (
    keys.length === expected.length && expected.every((k) => keys.includes(k))
  );
}

function parseAction(raw: unknown): ActionRecord {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new ParseError(`action must be an object, got ${typeof raw}`);
  }
  const rec = raw as Record<string, unknown>;
  const kind = rec["kind"];
  if (
    typeof kind !== "string" ||
    !Object.prototype.hasOwnProperty.call(PARAM_KEYS, kind)
  ) {
    throw new InvalidAction(
      `unknown action kind ${JSON.stringify(kind)}`,
      isInt(rec["seq"]) ? (rec["seq"] as number) : null,
    );
  }
  const seq = rec["seq"];
  if (!isInt(seq)) {
    throw new InvalidAction(`seq must be an integer, got ${JSON.stringify(seq)}`);
  }
  const t_ms = rec["t_ms"];
  if (!isInt(t_ms) || t_ms < 0) {
    throw new InvalidAction(
      `t_ms must be a non-negative integer, got ${JSON.stringify(t_ms)}`,
      seq,
    );
  }
  const paramKeys = PARAM_KEYS[kind as ActionKind];
  const allowed = new Set(["seq", "t_ms", "kind", ...paramKeys]);
  const extra = Object.keys(rec).filter((k) => !allowed.has(k)).sort();
  if (extra.length) {
    throw new InvalidAction(
      `unknown fields ${JSON.stringify(extra)} for kind '${kind}'`,
      seq,
    );
  }
  const missing = [...allowed].filter((k) => !(k in rec)).sort();
  if (missing.length) {
    throw new InvalidAction(
      `missing fields ${JSON.stringify(missing)} for kind '${kind}'`,
      seq,
    );
  }
  const params: Record<string, unknown> = {};
  for (const k of paramKeys) params[k] = rec[k];
  return { seq, t_ms, kind: kind as ActionKind, params };
}

export function logFromJson(text: string): SessionLog {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (exc) {
    throw new ParseError(`session log is not valid JSON: ${exc}`);
  }
  if (
    typeof doc !== "object" ||
    doc === null ||
    Array.isArray(doc) ||
    !sameKeys(doc, ["header", "actions"])
  ) {
    throw new ParseError("session log must contain exactly 'header' and 'actions'");
  }
  const { header, actions } = doc as { header: unknown; actions: unknown };
  if (typeof header !== "object" || header === null || Array.isArray(header)) {
    throw new ParseError("session log header must be an object");
  }
  const expected = ["dataset_id", "width", "height", "thresholds", "version"];
  if (!sameKeys(header, expected)) {
    throw new ParseError("header fields unexpected or missing");
  }
  const h = header as Record<string, unknown>;
  if (h["version"] !== SCHEMA_VERSION) {
    throw new ParseError(
      `unsupported log version ${JSON.stringify(h["version"])}, expected ${SCHEMA_VERSION}`,
    );
  }
  if (typeof h["dataset_id"] !== "string") {
    throw new ParseError("dataset_id must be a string");
  }
  if (!isInt(h["width"]) || !isInt(h["height"])) {
    throw new ParseError("width and height must be integers");
  }
  const thresholds = h["thresholds"];
  if (!Array.isArray(thresholds) || !thresholds.every(isNumber)) {
    throw new ParseError("thresholds must be a list of numbers");
  }
  if (!Array.isArray(actions)) {
    throw new ParseError("actions must be an array");
  }
  const parsed = actions.map(parseAction);
  let last: number | null = null;
  for (const a of parsed) {
    if (last !== null && a.seq <= last) {
      throw new InvalidAction(`seq ${a.seq} not greater than previous ${last}`, a.seq);
    }
    last = a.seq;
  }
  return {
    dataset_id: h["dataset_id"] as string,
    width: h["width"] as number,
    height: h["height"] as number,
    thresholds: thresholds.map(Number),
    actions: parsed,
    version: SCHEMA_VERSION,
  };
}
