"""Independent reference implementations used to derive expected test values.

Everything in this module is written deliberately differently from the
library: plain Python data structures, synchronous fixpoint loops, and
per-pixel arithmetic instead of union-find sweeps, queues, and vectorized
kernels. The tests treat these as ground truth.
"""

from __future__ import annotations

import numpy as np

# same neighborhood the library sweeps: 4 axis steps plus the two diagonals
# of the Freudenthal triangulation
FREUDENTHAL = ((-1, 0), (1, 0), (0, -1), (0, 1), (1, 1), (-1, -1))

AXIS4 = ((-1, 0), (1, 0), (0, -1), (0, 1))
DIAG8 = AXIS4 + ((-1, -1), (-1, 1), (1, -1), (1, 1))


def total_order(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vertices sorted by (value, flat index); pos is the inverse."""
    flat = f.ravel()
    n = flat.size
    order = np.lexsort((np.arange(n), flat))
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    return order, pos


def merge_events(f: np.ndarray, direction: str):
    """Brute-force sub/superlevel component tracking over the sweep.

    Returns [(saddle_vertex, (elder, elder, ...)), ...] in sweep order, each
    event's elders sorted by sweep appearance. A dict-based union-find over
    already-swept vertices; nothing shared with the library kernel.
    """
    h, w = f.shape
    order, _ = total_order(f)
    sweep = order if direction == "join" else order[::-1]
    appear = {int(v): i for i, v in enumerate(sweep)}

    parent: dict[int, int] = {}
    elder: dict[int, int] = {}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    events = []
    seen: set[int] = set()
    for v in sweep:
        v = int(v)
        r, c = divmod(v, w)
        roots = []
        for dr, dc in FREUDENTHAL:
            rr, cc = r + dr, c + dc
            if 0 <= rr < h and 0 <= cc < w:
                u = rr * w + cc
                if u in seen:
                    ru = find(u)
                    if ru not in roots:
                        roots.append(ru)
        seen.add(v)
        parent[v] = v
        if not roots:
            elder[v] = v
            continue
        if len(roots) >= 2:
            members = sorted((elder[rt] for rt in roots), key=lambda e: appear[e])
            events.append((v, tuple(members)))
        e = min((elder[rt] for rt in roots), key=lambda x: appear[x])
        for rt in roots:
            parent[rt] = v
        elder[v] = e
    return events


def local_extrema(f: np.ndarray):
    """(#minima, #maxima) under the sweep's (value, index) total order."""
    h, w = f.shape
    flat = f.ravel()

    def key(v):
        return (flat[v], v)

    n_min = n_max = 0
    for r in range(h):
        for c in range(w):
            v = r * w + c
            lower = higher = False
            for dr, dc in FREUDENTHAL:
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w:
                    u = rr * w + cc
                    if key(u) < key(v):
                        lower = True
                    else:
                        higher = True
            if not lower:
                n_min += 1
            if not higher:
                n_max += 1
    return n_min, n_max


def contour_components(f: np.ndarray, level: float) -> int:
    """Number of connected contour components of the level set f = level.

    Counts crossing edges of the Freudenthal triangulation joined whenever
    two crossing edges share a triangle. ``level`` must not equal any sample.
    """
    h, w = f.shape
    flat = f.ravel()
    edges = {}
    for r in range(h):
        for c in range(w):
            v = r * w + c
            for dr, dc in ((1, 0), (0, 1), (1, 1)):
                rr, cc = r + dr, c + dc
                if rr < h and cc < w:
                    u = rr * w + cc
                    lo, hi = sorted((flat[v], flat[u]))
                    if lo < level < hi:
                        edges[(v, u)] = len(edges)
    parent = list(range(len(edges)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def key(a, b):
        return (a, b) if a < b else (b, a)

    for r in range(h - 1):
        for c in range(w - 1):
            v = r * w + c
            for tri in ((v, v + 1, v + w + 1), (v, v + w, v + w + 1)):
                ids = [
                    edges[key(a, b)]
                    for i, a in enumerate(tri)
                    for b in tri[i + 1:]
                    if key(a, b) in edges
                ]
                for a, b in zip(ids, ids[1:]):
                    ra, rb = find(a), find(b)
                    if ra != rb:
                        parent[ra] = rb
    return len({find(i) for i in range(len(edges))})


def reachable(f, seeds, direction, tolerance, connectivity=4) -> np.ndarray:
    """Exhaustive monotone-path closure; synchronous, no queue.

    Marks every pixel connected to a seed by a path whose every step
    satisfies the per-step rule, by re-scanning the whole grid until no pixel
    changes. Returns sorted flat indices.
    """
    h, w = f.shape
    steps = AXIS4 if connectivity == 4 else DIAG8
    inside = np.zeros((h, w), dtype=bool)
    for s in np.asarray(seeds, dtype=np.int64).ravel():
        inside[s // w, s % w] = True
    changed = True
    while changed:
        changed = False
        for r in range(h):
            for c in range(w):
                if inside[r, c]:
                    continue
                for dr, dc in steps:
                    rr, cc = r + dr, c + dc
                    if not (0 <= rr < h and 0 <= cc < w) or not inside[rr, cc]:
                        continue
                    if direction == "downstream":
                        ok = f[r, c] <= f[rr, cc] + tolerance
                    else:
                        ok = f[r, c] >= f[rr, cc] - tolerance
                    if ok:
                        inside[r, c] = True
                        changed = True
                        break
    return np.flatnonzero(inside.ravel())


def polygon_pixels(vertices, shape) -> np.ndarray:
    """Per-pixel even-odd test matching the half-open span conventions.

    A pixel center (c, r) is inside when an odd number of non-horizontal
    edges cross scanline y = r over the half-open [min(y), max(y)) span at an
    intersection x <= c.
    """
    h, w = shape
    verts = [(float(x), float(y)) for x, y in vertices]
    out = []
    for r in range(h):
        for c in range(w):
            crossings = 0
            for i, (x1, y1) in enumerate(verts):
                x2, y2 = verts[(i + 1) % len(verts)]
                if y1 == y2:
                    continue
                ylo, yhi = (y1, y2) if y1 < y2 else (y2, y1)
                if not (ylo <= r < yhi):
                    continue
                x = x1 + (r - y1) * (x2 - x1) / (y2 - y1)
                if x <= c:
                    crossings += 1
            if crossings % 2 == 1:
                out.append(r * w + c)
    return np.array(out, dtype=np.int64)


_SIGN = {0: 0.0, 1: -1.0, 2: 1.0}


def aggregate_pixel(votes) -> tuple[float, float, float, float]:
    """(mean, variance, flood_score, dry_score) of one pixel's label votes.

    Scalar arithmetic straight from the definitions; flood/dry are NaN when
    nobody labeled the pixel.
    """
    signed = [_SIGN[int(v)] for v in votes]
    n = len(signed)
    mean = sum(signed) / n
    var = sum((s - mean) ** 2 for s in signed) / n
    flooded = sum(1 for v in votes if int(v) == 1)
    dry = sum(1 for v in votes if int(v) == 2)
    if flooded + dry == 0:
        return mean, var, float("nan"), float("nan")
    return mean, var, flooded / (flooded + dry), dry / (flooded + dry)
