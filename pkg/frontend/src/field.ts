/**
 * Normalized elevation fields as flat typed arrays.
 *
 * The gateway serves the field as row-major little-endian float64; reading it
 * into a Float64Array preserves the exact bit patterns the backend computed,
 * which is what makes the local selection tools replay-identical.
 */

import { BadParams } from "./errors";

export interface Field {
  width: number;
  height: number;
  values: Float64Array; // length width * height, row-major
}

export function fieldFromBuffer(
  buffer: ArrayBuffer,
  width: number,
  height: number,
): Field {
  const expected = width * height * 8;
  if (buffer.byteLength !== expected) {
    throw new BadParams(
      `field payload is ${buffer.byteLength} bytes, expected ${expected} for ${width}x${height}`,
    );
  }
  return { width, height, values: new Float64Array(buffer) };
}

export function fieldFromValues(
  values: ArrayLike<number>,
  width: number,
  height: number,
): Field {
  if (values.length !== width * height) {
    throw new BadParams(
      `got ${values.length} values for a ${width}x${height} field`,
    );
  }
  return { width, height, values: Float64Array.from(values) };
}

export function inBounds(field: { width: number; height: number }, r: number, c: number): boolean {
  return r >= 0 && r < field.height && c >= 0 && c < field.width;
}
