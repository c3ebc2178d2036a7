/**
 * Precomputed segmentation levels fetched from the gateway.
 *
 * Each level is a plane of uint32 segment ids; picking a pixel selects every
 * pixel sharing its id, same as the backend's segment lookup.
 */

import { BadParams, OutOfBounds } from "./errors";

export interface Segmentation {
  width: number;
  height: number;
  segmentCount: number;
  ids: Uint32Array; // row-major segment id per pixel
}

export function segmentationFromBuffer(
  buffer: ArrayBuffer,
  width: number,
  height: number,
  segmentCount: number,
): Segmentation {
  const expected = width * height * 4;
  if (buffer.byteLength !== expected) {
    throw new BadParams(
      `segmentation payload is ${buffer.byteLength} bytes, expected ${expected} for ${width}x${height}`,
    );
  }
  return { width, height, segmentCount, ids: new Uint32Array(buffer) };
}

/** Sorted flat indices of the segment containing `pixel` (row, col). */
export function segmentPixels(
  seg: Segmentation,
  pixel: readonly [number, number],
): Int32Array {
  const r = Math.trunc(pixel[0]);
  const c = Math.trunc(pixel[1]);
  if (!(r >= 0 && r < seg.height && c >= 0 && c < seg.width)) {
    throw new OutOfBounds(`pixel (${r}, ${c}) outside ${seg.height}x${seg.width} grid`);
  }
  const sid = seg.ids[r * seg.width + c];
  let count = 0;
  for (let i = 0; i < seg.ids.length; i++) if (seg.ids[i] === sid) count++;
  const out = new Int32Array(count);
  let k = 0;
  for (let i = 0; i < seg.ids.length; i++) if (seg.ids[i] === sid) out[k++] = i;
  return out;
}

/** Boolean mask (1 byte per pixel) of pixels with a 4-neighbor in a different segment. */
export function segmentBorders(seg: Segmentation): Uint8Array {
  const { width: w, height: h, ids } = seg;
  const border = new Uint8Array(w * h);
  for (let r = 0; r < h; r++) {
    for (let c = 0; c < w; c++) {
      const i = r * w + c;
      if (
        (r + 1 < h && ids[i] !== ids[i + w]) ||
        (c + 1 < w && ids[i] !== ids[i + 1]) ||
        (r > 0 && ids[i] !== ids[i - w]) ||
        (c > 0 && ids[i] !== ids[i - 1])
      ) {
        border[i] = 1;
      }
    }
  }
  return border;
}
