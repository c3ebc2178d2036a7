import { inflateSync } from "node:zlib";

import { fieldFromValues, type Field } from "../src/field";

/** Deterministic 32-bit PRNG so test corpora are reproducible. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randInt(rand: () => number, n: number): number {
  return Math.floor(rand() * n);
}

export function makeField(rows: number[][]): Field {
  const height = rows.length;
  const width = rows[0].length;
  return fieldFromValues(rows.flat(), width, height);
}

export function randomField(rand: () => number, width: number, height: number): Field {
  const values = new Float64Array(width * height);
  for (let i = 0; i < values.length; i++) values[i] = rand();
  return { width, height, values };
}

export function inflate(data: Uint8Array): Uint8Array {
  const buf = inflateSync(data);
  return new Uint8Array(buf.buffer, buf.byteOffset, buf.byteLength);
}
