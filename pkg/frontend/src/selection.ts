/**
 * Elevation-guided region growing and polygon selection.
 *
 * Direct port of the backend selection tools. Selections are sorted flat
 * pixel indices (row * width + col); polygon vertices are (x, y) =
 * (column, row) points and a pixel belongs to a polygon when its integer
 * center is inside under the even-odd rule. All arithmetic is IEEE double,
 * same as the service, so results match bit for bit on the same field.
 */

import { BadParams, OutOfBounds, TooFewVertices } from "./errors";
import type { Field } from "./field";
import { DOWNSTREAM, UPSTREAM, type Direction } from "./labels";

// axis steps first, then the diagonal steps used only with connectivity 8
const DR = [-1, 1, 0, 0, -1, -1, 1, 1];
const DC = [0, 0, -1, 1, -1, 1, -1, 1];

function grow(
  f: Float64Array,
  width: number,
  height: number,
  seeds: Int32Array,
  downstream: boolean,
  tol: number,
  diagonals: boolean,
): Uint8Array {
  const n = f.length;
  const visited = new Uint8Array(n);
  const queue = new Int32Array(n);
  let tail = 0;
  for (let i = 0; i < seeds.length; i++) {
    const s = seeds[i];
    if (!visited[s]) {
      visited[s] = 1;
      queue[tail++] = s;
    }
  }
  const nsteps = diagonals ? 8 : 4;
  let head = 0;
  while (head < tail) {
    const v = queue[head++];
    const r = Math.floor(v / width);
    const c = v % width;
    const fv = f[v];
    for (let t = 0; t < nsteps; t++) {
      const rr = r + DR[t];
      const cc = c + DC[t];
      if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
      const w = rr * width + cc;
      if (visited[w]) continue;
      const fw = f[w];
      const ok = downstream ? fw <= fv + tol : fw >= fv - tol;
      if (ok) {
        visited[w] = 1;
        queue[tail++] = w;
      }
    }
  }
  return visited;
}

function collectVisited(visited: Uint8Array): Int32Array {
  let count = 0;
  for (let i = 0; i < visited.length; i++) if (visited[i]) count++;
  const out = new Int32Array(count);
  let k = 0;
  for (let i = 0; i < visited.length; i++) if (visited[i]) out[k++] = i;
  return out;
}

function checkParams(direction: string, tolerance: number, connectivity: number): void {
  if (direction !== DOWNSTREAM && direction !== UPSTREAM) {
    throw new BadParams(
      `direction must be '${DOWNSTREAM}' or '${UPSTREAM}', got '${direction}'`,
    );
  }
  if (!(tolerance >= 0)) {
    throw new BadParams(`tolerance must be non-negative, got ${tolerance}`);
  }
  if (connectivity !== 4 && connectivity !== 8) {
    throw new BadParams(`connectivity must be 4 or 8, got ${connectivity}`);
  }
}

/**
 * Pixels reachable from `seed` by monotone elevation steps.
 *
 * Downstream steps allow f(next) <= f(current) + tolerance, upstream steps
 * f(next) >= f(current) - tolerance; the rule is applied per step, not
 * relative to the seed. The seed is always part of the result.
 */
export function bfsSelect(
  field: Field,
  seed: readonly [number, number],
  direction: Direction,
  tolerance = 0.0,
  connectivity: 4 | 8 = 4,
): Int32Array {
  checkParams(direction, tolerance, connectivity);
  const { width: w, height: h } = field;
  const r = Math.trunc(seed[0]);
  const c = Math.trunc(seed[1]);
  if (!(r >= 0 && r < h && c >= 0 && c < w)) {
    throw new OutOfBounds(`seed (${r}, ${c}) outside ${h}x${w} grid`);
  }
  const visited = grow(
    field.values, w, h, Int32Array.of(r * w + c),
    direction === DOWNSTREAM, tolerance, connectivity === 8,
  );
  return collectVisited(visited);
}

/**
 * Even-odd scanline fill of a polygon over integer pixel centers.
 *
 * Each scanline crosses every non-horizontal edge over the half-open span
 * [min(y), max(y)); spans between intersection pairs fill half-open
 * [xa, xb) column ranges, so shared or touching edges give each pixel
 * center a single owner.
 */
export function rasterizePolygon(
  vertices: ReadonlyArray<readonly [number, number]>,
  shape: readonly [number, number],
): Int32Array {
  if (vertices.length < 3) {
    throw new TooFewVertices(
      `polygon needs at least 3 vertices, got ${vertices.length}`,
    );
  }
  const [h, w] = shape;
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const [, y] of vertices) {
    if (y < yMin) yMin = y;
    if (y > yMax) yMax = y;
  }
  const rowLo = Math.max(0, Math.ceil(yMin));
  const rowHi = Math.min(h - 1, Math.floor(yMax));
  const pixels: number[] = [];
  for (let y = rowLo; y <= rowHi; y++) {
    const xs: number[] = [];
    for (let i = 0; i < vertices.length; i++) {
      const [x1, y1] = vertices[i];
      const [x2, y2] = vertices[(i + 1) % vertices.length];
      if (y1 === y2) continue;
      const ylo = y1 < y2 ? y1 : y2;
      const yhi = y1 < y2 ? y2 : y1;
      if (ylo <= y && y < yhi) {
        xs.push(x1 + ((y - y1) * (x2 - x1)) / (y2 - y1));
      }
    }
    xs.sort((a, b) => a - b);
    for (let k = 0; k + 1 < xs.length; k += 2) {
      const cs = Math.max(0, Math.ceil(xs[k]));
      const ce = Math.min(w, Math.ceil(xs[k + 1]));
      const base = y * w;
      for (let c = cs; c < ce; c++) pixels.push(base + c);
    }
  }
  return Int32Array.from(pixels);
}

/**
 * Filled polygon interior grown outward by the monotone step rule.
 *
 * Every interior pixel is a BFS seed, so the result always contains the
 * fill; an empty fill selects nothing.
 */
export function polygonBfsSelect(
  field: Field,
  vertices: ReadonlyArray<readonly [number, number]>,
  direction: Direction,
  tolerance = 0.0,
  connectivity: 4 | 8 = 4,
): Int32Array {
  checkParams(direction, tolerance, connectivity);
  const { width: w, height: h } = field;
  const interior = rasterizePolygon(vertices, [h, w]);
  if (interior.length === 0) return interior;
  const visited = grow(
    field.values, w, h, interior,
    direction === DOWNSTREAM, tolerance, connectivity === 8,
  );
  return collectVisited(visited);
}
