/**
 * Review overlays rendered client-side from aggregate planes.
 *
 * The arithmetic here mirrors the service renderer exactly: the aggregate
 * view blends white toward pure red (negative mean, flooded) or blue
 * (positive, dry) with blend factor and alpha both |v| after the certainty
 * threshold; the variance view blends toward the highlight color with
 * normalized variance and saturates alpha at tau. Quantization is
 * floor(x * 255 + 0.5) per channel, so for identical input planes the RGBA
 * bytes are identical to a served overlay.
 */

import { BadParams } from "./errors";
import {
  AGGREGATE_VIEW,
  DRY_COLOR,
  FLOOD_COLOR,
  VARIANCE_HIGHLIGHT,
  VARIANCE_VIEW,
  type OverlayView,
} from "./labels";

export interface Plane {
  width: number;
  height: number;
  values: Float64Array;
}

export function planeFromBuffer(buffer: ArrayBuffer, width: number, height: number): Plane {
  const expected = width * height * 8;
  if (buffer.byteLength !== expected) {
    throw new BadParams(
      `plane payload is ${buffer.byteLength} bytes, expected ${expected} for ${width}x${height}`,
    );
  }
  return { width, height, values: new Float64Array(buffer) };
}

export function checkTau(tau: number): void {
  if (!(tau >= 0 && tau <= 1)) {
    throw new BadParams(`tau must be in [0, 1], got ${tau}`);
  }
}

/** Collapse to 0 every value whose magnitude is not greater than tau. */
export function applyCertaintyThreshold(mean: Plane, tau: number): Plane {
  checkTau(tau);
  const out = new Float64Array(mean.values.length);
  for (let i = 0; i < out.length; i++) {
    const v = mean.values[i];
    out[i] = Math.abs(v) <= tau ? 0.0 : v;
  }
  return { width: mean.width, height: mean.height, values: out };
}

function quantize(x: number): number {
  return Math.floor(x * 255.0 + 0.5);
}

/** RGBA bytes of a mean or variance plane, row-major, 4 bytes per pixel. */
export function renderOverlay(plane: Plane, view: OverlayView, tau: number): Uint8Array {
  if (view !== AGGREGATE_VIEW && view !== VARIANCE_VIEW) {
    throw new BadParams(`view must be '${AGGREGATE_VIEW}' or '${VARIANCE_VIEW}', got '${view}'`);
  }
  checkTau(tau);
  const n = plane.width * plane.height;
  const out = new Uint8Array(n * 4);
  if (view === AGGREGATE_VIEW) {
    const v = applyCertaintyThreshold(plane, tau).values;
    for (let i = 0; i < n; i++) {
      const t = Math.abs(v[i]);
      const target = v[i] < 0 ? FLOOD_COLOR : DRY_COLOR;
      out[i * 4] = Math.floor((1.0 - t) * 255.0 + t * target[0] + 0.5);
      out[i * 4 + 1] = Math.floor((1.0 - t) * 255.0 + t * target[1] + 0.5);
      out[i * 4 + 2] = Math.floor((1.0 - t) * 255.0 + t * target[2] + 0.5);
      out[i * 4 + 3] = quantize(t);
    }
    return out;
  }
  const varr = plane.values;
  let maxVar = 0.0;
  for (let i = 0; i < n; i++) if (varr[i] > maxVar) maxVar = varr[i];
  for (let i = 0; i < n; i++) {
    const nv = maxVar === 0.0 ? 0.0 : varr[i] / maxVar;
    out[i * 4] = Math.floor((1.0 - nv) * 255.0 + nv * VARIANCE_HIGHLIGHT[0] + 0.5);
    out[i * 4 + 1] = Math.floor((1.0 - nv) * 255.0 + nv * VARIANCE_HIGHLIGHT[1] + 0.5);
    out[i * 4 + 2] = Math.floor((1.0 - nv) * 255.0 + nv * VARIANCE_HIGHLIGHT[2] + 0.5);
    const alpha = tau > 0 ? Math.min(nv / tau, 1.0) : nv > 0 ? 1.0 : 0.0;
    out[i * 4 + 3] = quantize(alpha);
  }
  return out;
}

/**
 * Signed mean and population variance recomputed from local masks.
 *
 * Client-side convenience for previewing agreement before submitting;
 * Flooded votes count -1, Dry +1, Unlabeled 0.
 */
export function meanVarianceOf(
  masks: readonly Uint8Array[],
  width: number,
  height: number,
): { mean: Plane; variance: Plane } {
  if (masks.length === 0) throw new BadParams("need at least one mask");
  const n = width * height;
  const mean = new Float64Array(n);
  const variance = new Float64Array(n);
  const sign = [0, -1, 1];
  for (const m of masks) {
    if (m.length !== n) throw new BadParams(`mask length ${m.length} != ${n}`);
    for (let i = 0; i < n; i++) mean[i] += sign[m[i]];
  }
  for (let i = 0; i < n; i++) mean[i] /= masks.length;
  for (const m of masks) {
    for (let i = 0; i < n; i++) {
      const d = sign[m[i]] - mean[i];
      variance[i] += d * d;
    }
  }
  for (let i = 0; i < n; i++) variance[i] /= masks.length;
  return {
    mean: { width, height, values: mean },
    variance: { width, height, values: variance },
  };
}
