"""Elevation-guided region growing and polygon selection.

Selections are returned as sorted flat pixel indices (row * width + col).
Polygon vertices live in pixel space as (x, y) = (column, row) points; a
pixel belongs to a polygon when its integer center is inside under the
even-odd rule.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .errors import BadParams, OutOfBounds, TooFewVertices
from .raster import NormalizedField

DOWNSTREAM = "downstream"
UPSTREAM = "upstream"


@njit(cache=True)
def _grow(f, width, height, seeds, downstream, tol, diagonals):
    n = f.shape[0]
    visited = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    tail = 0
    for i in range(seeds.shape[0]):
        s = seeds[i]
        if not visited[s]:
            visited[s] = True
            queue[tail] = s
            tail += 1
    # axis steps first, then the diagonal steps used only with connectivity 8
    dr = (-1, 1, 0, 0, -1, -1, 1, 1)
    dc = (0, 0, -1, 1, -1, 1, -1, 1)
    nsteps = 8 if diagonals else 4
    head = 0
    while head < tail:
        v = queue[head]
        head += 1
        r = v // width
        c = v % width
        fv = f[v]
        for t in range(nsteps):
            rr = r + dr[t]
            cc = c + dc[t]
            if rr < 0 or rr >= height or cc < 0 or cc >= width:
                continue
            w = rr * width + cc
            if visited[w]:
                continue
            fw = f[w]
            if downstream:
                ok = fw <= fv + tol
            else:
                ok = fw >= fv - tol
            if ok:
                visited[w] = True
                queue[tail] = w
                tail += 1
    return visited


def _check_params(direction: str, tolerance: float, connectivity: int) -> None:
    if direction not in (DOWNSTREAM, UPSTREAM):
        raise BadParams(
            f"direction must be {DOWNSTREAM!r} or {UPSTREAM!r}, got {direction!r}"
        )
    if not (tolerance >= 0):
        raise BadParams(f"tolerance must be non-negative, got {tolerance}")
    if connectivity not in (4, 8):
        raise BadParams(f"connectivity must be 4 or 8, got {connectivity}")


def bfs_select(
    field: NormalizedField,
    seed: tuple[int, int],
    direction: str,
    tolerance: float = 0.0,
    connectivity: int = 4,
) -> np.ndarray:
    """Pixels reachable from ``seed`` by monotone elevation steps.

    Downstream steps allow f(next) <= f(current) + tolerance, upstream steps
    f(next) >= f(current) - tolerance; the rule is applied per step, not
    relative to the seed. The seed is always part of the result.
    """
    _check_params(direction, tolerance, connectivity)
    h, w = field.f.shape
    r, c = int(seed[0]), int(seed[1])
    if not (0 <= r < h and 0 <= c < w):
        raise OutOfBounds(f"seed ({r}, {c}) outside {h}x{w} grid")
    seeds = np.array([r * w + c], dtype=np.int64)
    visited = _grow(
        field.f.ravel(), w, h, seeds, direction == DOWNSTREAM,
        float(tolerance), connectivity == 8,
    )
    return np.flatnonzero(visited)


def rasterize_polygon(vertices, shape: tuple[int, int]) -> np.ndarray:
    """Even-odd scanline fill of a polygon over integer pixel centers.

    Each scanline crosses every non-horizontal edge over the half-open span
    [min(y), max(y)); spans between intersection pairs fill half-open
    [xa, xb) column ranges. Both conventions together give each pixel center
    a single owner for shared or touching edges.
    """
    verts = [(float(p[0]), float(p[1])) for p in vertices]
    if len(verts) < 3:
        raise TooFewVertices(f"polygon needs at least 3 vertices, got {len(verts)}")
    h, w = shape
    ys = [y for _, y in verts]
    row_lo = max(0, math.ceil(min(ys)))
    row_hi = min(h - 1, math.floor(max(ys)))
    pixels = []
    for y in range(row_lo, row_hi + 1):
        xs = []
        for i, (x1, y1) in enumerate(verts):
            x2, y2 = verts[(i + 1) % len(verts)]
            if y1 == y2:
                continue
            ylo, yhi = (y1, y2) if y1 < y2 else (y2, y1)
            if ylo <= y < yhi:
                xs.append(x1 + (y - y1) * (x2 - x1) / (y2 - y1))
        xs.sort()
        for k in range(0, len(xs) - 1, 2):
            cs = max(0, math.ceil(xs[k]))
            ce = min(w, math.ceil(xs[k + 1]))
            base = y * w
            for c in range(cs, ce):
                pixels.append(base + c)
    return np.array(pixels, dtype=np.int64)


def polygon_bfs_select(
    field: NormalizedField,
    vertices,
    direction: str,
    tolerance: float = 0.0,
    connectivity: int = 4,
) -> np.ndarray:
    """Filled polygon interior grown outward by the monotone step rule.

    Every interior pixel is a BFS seed; exterior growth therefore starts at
    exactly the border pixels of the filled region, and the result always
    contains the fill.
    """
    _check_params(direction, tolerance, connectivity)
    h, w = field.f.shape
    interior = rasterize_polygon(vertices, (h, w))
    if interior.size == 0:
        return interior
    visited = _grow(
        field.f.ravel(), w, h, interior, direction == DOWNSTREAM,
        float(tolerance), connectivity == 8,
    )
    return np.flatnonzero(visited)
