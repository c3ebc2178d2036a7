"""Greedy-insertion TIN over a DEM, with STL and OBJ export.

Vertices sit on integer grid positions (x = column, y = row, z = elevation
in meters). All planarity and circumcircle tests run on int64 coordinate
arithmetic, which is exact for grids up to roughly 30,000 pixels per side,
so the triangulation is deterministic. Cocircular point sets (ubiquitous on
integer grids) are left unflipped, keeping the non-strict empty-circle
property.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import BadParams
from .raster import DemGrid


@dataclass(frozen=True)
class TerrainMesh:
    """Triangulated heightmap.

    ``vertices`` is (V, 3) float64 rows of (x, y, z); ``uvs`` is (V, 2) with
    u = x/(width-1) and v = 1 - y/(height-1); ``triangles`` is (T, 3) int32
    with counter-clockwise winding in the x/y plane.
    """

    vertices: np.ndarray
    uvs: np.ndarray
    triangles: np.ndarray
    max_error_bound: float

    @property
    def vertex_count(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def triangle_count(self) -> int:
        return int(self.triangles.shape[0])


@njit(cache=True)
def _cross(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


@njit(cache=True)
def _incircle(ax, ay, bx, by, cx, cy, dx, dy):
    adx = ax - dx
    ady = ay - dy
    bdx = bx - dx
    bdy = by - dy
    cdx = cx - dx
    cdy = cy - dy
    ad = adx * adx + ady * ady
    bd = bdx * bdx + bdy * bdy
    cd = cdx * cdx + cdy * cdy
    return (
        adx * (bdy * cd - bd * cdy)
        - ady * (bdx * cd - bd * cdx)
        + ad * (bdx * cdy - bdy * cdx)
    )


@njit(cache=True)
def _heap_push(herr, htri, hsize, err, tri):
    i = hsize
    herr[i] = err
    htri[i] = tri
    while i > 0:
        p = (i - 1) // 2
        if herr[p] < herr[i] or (herr[p] == herr[i] and htri[p] > htri[i]):
            herr[p], herr[i] = herr[i], herr[p]
            htri[p], htri[i] = htri[i], htri[p]
            i = p
        else:
            break
    return hsize + 1


@njit(cache=True)
def _heap_pop(herr, htri, hsize):
    err = herr[0]
    tri = htri[0]
    hsize -= 1
    herr[0] = herr[hsize]
    htri[0] = htri[hsize]
    i = 0
    while True:
        left = 2 * i + 1
        right = left + 1
        best = i
        if left < hsize and (
            herr[left] > herr[best]
            or (herr[left] == herr[best] and htri[left] < htri[best])
        ):
            best = left
        if right < hsize and (
            herr[right] > herr[best]
            or (herr[right] == herr[best] and htri[right] < htri[best])
        ):
            best = right
        if best == i:
            break
        herr[best], herr[i] = herr[i], herr[best]
        htri[best], htri[i] = htri[i], htri[best]
        i = best
    return err, tri, hsize


@njit(cache=True)
def _rescan(t, tv, vx, vy, vz, zflat, width, is_vertex, cand, cand_err, max_error):
    """Find the worst still-uninserted sample inside triangle t.

    Ties go to the smallest flat index (row-major scan with strict improvement).
    Returns the sample id, or -1 when every sample deviates <= max_error.
    """
    a = tv[t, 0]
    b = tv[t, 1]
    c = tv[t, 2]
    ax, ay, za = vx[a], vy[a], vz[a]
    bx, by, zb = vx[b], vy[b], vz[b]
    cx, cy, zc = vx[c], vy[c], vz[c]
    x0 = min(ax, min(bx, cx))
    x1 = max(ax, max(bx, cx))
    y0 = min(ay, min(by, cy))
    y1 = max(ay, max(by, cy))
    best_err = max_error
    best = np.int64(-1)
    for y in range(y0, y1 + 1):
        rowbase = y * width
        for x in range(x0, x1 + 1):
            s = rowbase + x
            if is_vertex[s]:
                continue
            w0 = _cross(bx, by, cx, cy, x, y)
            if w0 < 0:
                continue
            w1 = _cross(cx, cy, ax, ay, x, y)
            if w1 < 0:
                continue
            w2 = _cross(ax, ay, bx, by, x, y)
            if w2 < 0:
                continue
            zi = (w0 * za + w1 * zb + w2 * zc) / (w0 + w1 + w2)
            e = zflat[s] - zi
            if e < 0:
                e = -e
            if e > best_err:
                best_err = e
                best = s
    cand[t] = best
    cand_err[t] = best_err if best >= 0 else -1.0
    return best


@njit(cache=True)
def _adj_replace(adj, target, old, new):
    if target >= 0:
        for k in range(3):
            if adj[target, k] == old:
                adj[target, k] = new
                return


@njit(cache=True)
def _index_of(tv, t, vertex):
    for k in range(3):
        if tv[t, k] == vertex:
            return k
    return -1


@njit(cache=True)
def _triangulate(zflat, width, height, max_error, max_vertices):
    n = width * height
    cap_v = max_vertices
    cap_t = 2 * cap_v + 16
    cap_h = 4 * cap_t

    vx = np.empty(cap_v, dtype=np.int64)
    vy = np.empty(cap_v, dtype=np.int64)
    vz = np.empty(cap_v, dtype=np.float64)
    tv = np.empty((cap_t, 3), dtype=np.int64)
    adj = np.empty((cap_t, 3), dtype=np.int64)
    alive = np.zeros(cap_t, dtype=np.bool_)
    cand = np.full(cap_t, -1, dtype=np.int64)
    cand_err = np.full(cap_t, -1.0, dtype=np.float64)
    is_vertex = np.zeros(n, dtype=np.bool_)
    herr = np.empty(cap_h, dtype=np.float64)
    htri = np.empty(cap_h, dtype=np.int64)
    hsize = 0
    touched = np.empty(cap_t, dtype=np.int64)
    touched_flag = np.zeros(cap_t, dtype=np.bool_)
    lstack = np.empty(4 * cap_t, dtype=np.int64)

    wmax = width - 1
    hmax = height - 1
    vx[0] = 0
    vy[0] = 0
    vx[1] = wmax
    vy[1] = 0
    vx[2] = wmax
    vy[2] = hmax
    vx[3] = 0
    vy[3] = hmax
    for i in range(4):
        s = vy[i] * width + vx[i]
        vz[i] = zflat[s]
        is_vertex[s] = True
    nv = 4
    # two corner triangles split along the (0,0)-(wmax,hmax) diagonal
    tv[0, 0] = 0
    tv[0, 1] = 1
    tv[0, 2] = 2
    tv[1, 0] = 0
    tv[1, 1] = 2
    tv[1, 2] = 3
    adj[0, 0] = -1
    adj[0, 1] = 1
    adj[0, 2] = -1
    adj[1, 0] = -1
    adj[1, 1] = -1
    adj[1, 2] = 0
    alive[0] = True
    alive[1] = True
    nt = 2
    for t in range(2):
        if _rescan(t, tv, vx, vy, vz, zflat, width, is_vertex, cand, cand_err, max_error) >= 0:
            hsize = _heap_push(herr, htri, hsize, cand_err[t], t)

    while nv < max_vertices and hsize > 0:
        t = np.int64(-1)
        while hsize > 0:
            err, tt, hsize = _heap_pop(herr, htri, hsize)
            if not alive[tt] or cand[tt] < 0 or cand_err[tt] != err:
                continue
            if is_vertex[cand[tt]]:
                continue
            t = tt
            break
        if t < 0:
            break
        p = cand[t]
        px = p % width
        py = p // width
        pv = nv
        vx[pv] = px
        vy[pv] = py
        vz[pv] = zflat[p]
        is_vertex[p] = True
        nv += 1

        a = tv[t, 0]
        b = tv[t, 1]
        c = tv[t, 2]
        e0 = _cross(vx[b], vy[b], vx[c], vy[c], px, py)
        e1 = _cross(vx[c], vy[c], vx[a], vy[a], px, py)
        e2 = _cross(vx[a], vy[a], vx[b], vy[b], px, py)

        ntouch = 0
        lsize = 0
        if e0 > 0 and e1 > 0 and e2 > 0:
            # interior: split t into three fans around pv
            na = adj[t, 0]
            nb = adj[t, 1]
            nc = adj[t, 2]
            t_u = nt
            t_v = nt + 1
            nt += 2
            tv[t, 0] = a
            tv[t, 1] = b
            tv[t, 2] = pv
            adj[t, 0] = t_u
            adj[t, 1] = t_v
            adj[t, 2] = nc
            tv[t_u, 0] = b
            tv[t_u, 1] = c
            tv[t_u, 2] = pv
            adj[t_u, 0] = t_v
            adj[t_u, 1] = t
            adj[t_u, 2] = na
            _adj_replace(adj, na, t, t_u)
            tv[t_v, 0] = c
            tv[t_v, 1] = a
            tv[t_v, 2] = pv
            adj[t_v, 0] = t
            adj[t_v, 1] = t_u
            adj[t_v, 2] = nb
            _adj_replace(adj, nb, t, t_v)
            alive[t_u] = True
            alive[t_v] = True
            for q in (t, t_u, t_v):
                lstack[lsize] = q
                lsize += 1
                if not touched_flag[q]:
                    touched_flag[q] = True
                    touched[ntouch] = q
                    ntouch += 1
        else:
            # pv lies on one edge; rotate so the zero edge is (b, c)
            iz = 0 if e0 == 0 else (1 if e1 == 0 else 2)
            a = tv[t, iz]
            b = tv[t, (iz + 1) % 3]
            c = tv[t, (iz + 2) % 3]
            u = adj[t, iz]
            nb = adj[t, (iz + 1) % 3]
            nc = adj[t, (iz + 2) % 3]
            if u == -1:
                # boundary edge: split t in two
                t2 = nt
                nt += 1
                tv[t, 0] = a
                tv[t, 1] = b
                tv[t, 2] = pv
                adj[t, 0] = -1
                adj[t, 1] = t2
                adj[t, 2] = nc
                tv[t2, 0] = a
                tv[t2, 1] = pv
                tv[t2, 2] = c
                adj[t2, 0] = -1
                adj[t2, 1] = nb
                adj[t2, 2] = t
                _adj_replace(adj, nb, t, t2)
                alive[t2] = True
                for q in (t, t2):
                    lstack[lsize] = q
                    lsize += 1
                    if not touched_flag[q]:
                        touched_flag[q] = True
                        touched[ntouch] = q
                        ntouch += 1
            else:
                # shared edge: split both t and its neighbor u
                jd = -1
                for k in range(3):
                    if tv[u, k] != b and tv[u, k] != c:
                        jd = k
                d = tv[u, jd]
                jb = _index_of(tv, u, b)
                jc = _index_of(tv, u, c)
                u_bd = adj[u, jc]
                u_dc = adj[u, jb]
                t2 = nt
                u2 = nt + 1
                nt += 2
                tv[t, 0] = a
                tv[t, 1] = b
                tv[t, 2] = pv
                adj[t, 0] = u2
                adj[t, 1] = t2
                adj[t, 2] = nc
                tv[t2, 0] = a
                tv[t2, 1] = pv
                tv[t2, 2] = c
                adj[t2, 0] = u
                adj[t2, 1] = nb
                adj[t2, 2] = t
                _adj_replace(adj, nb, t, t2)
                tv[u, 0] = c
                tv[u, 1] = pv
                tv[u, 2] = d
                adj[u, 0] = u2
                adj[u, 1] = u_dc
                adj[u, 2] = t2
                tv[u2, 0] = pv
                tv[u2, 1] = b
                tv[u2, 2] = d
                adj[u2, 0] = u_bd
                adj[u2, 1] = u
                adj[u2, 2] = t
                _adj_replace(adj, u_bd, u, u2)
                alive[t2] = True
                alive[u2] = True
                for q in (t, t2, u, u2):
                    lstack[lsize] = q
                    lsize += 1
                    if not touched_flag[q]:
                        touched_flag[q] = True
                        touched[ntouch] = q
                        ntouch += 1

        # Lawson legalization of edges opposite pv
        while lsize > 0:
            lsize -= 1
            tt = lstack[lsize]
            if not alive[tt]:
                continue
            i = _index_of(tv, tt, pv)
            if i < 0:
                continue
            o = adj[tt, i]
            if o == -1:
                continue
            b1 = tv[tt, (i + 1) % 3]
            c1 = tv[tt, (i + 2) % 3]
            jd = -1
            for k in range(3):
                if tv[o, k] != b1 and tv[o, k] != c1:
                    jd = k
            d = tv[o, jd]
            if (
                _incircle(
                    vx[pv], vy[pv], vx[b1], vy[b1], vx[c1], vy[c1], vx[d], vy[d]
                )
                > 0
            ):
                jb1 = _index_of(tv, o, b1)
                jc1 = _index_of(tv, o, c1)
                o_b1d = adj[o, jc1]
                o_dc1 = adj[o, jb1]
                t_c1pv = adj[tt, (i + 1) % 3]
                t_pvb1 = adj[tt, (i + 2) % 3]
                tv[tt, 0] = pv
                tv[tt, 1] = b1
                tv[tt, 2] = d
                adj[tt, 0] = o_b1d
                adj[tt, 1] = o
                adj[tt, 2] = t_pvb1
                tv[o, 0] = pv
                tv[o, 1] = d
                tv[o, 2] = c1
                adj[o, 0] = o_dc1
                adj[o, 1] = t_c1pv
                adj[o, 2] = tt
                _adj_replace(adj, o_b1d, o, tt)
                _adj_replace(adj, t_c1pv, tt, o)
                for q in (tt, o):
                    lstack[lsize] = q
                    lsize += 1
                    if not touched_flag[q]:
                        touched_flag[q] = True
                        touched[ntouch] = q
                        ntouch += 1

        for k in range(ntouch):
            q = touched[k]
            touched_flag[q] = False
            if not alive[q]:
                continue
            if _rescan(q, tv, vx, vy, vz, zflat, width, is_vertex, cand, cand_err, max_error) >= 0:
                if hsize >= cap_h:
                    # drop stale entries and re-heapify
                    kept = 0
                    for hidx in range(hsize):
                        trj = htri[hidx]
                        if (
                            alive[trj]
                            and cand[trj] >= 0
                            and cand_err[trj] == herr[hidx]
                            and not is_vertex[cand[trj]]
                        ):
                            herr[kept] = herr[hidx]
                            htri[kept] = trj
                            kept += 1
                    hsize = 0
                    for hidx in range(kept):
                        hsize = _heap_push(herr, htri, hsize, herr[hidx], htri[hidx])
                hsize = _heap_push(herr, htri, hsize, cand_err[q], q)

    return vx[:nv], vy[:nv], vz[:nv], tv[:nt], alive[:nt]


@njit(cache=True)
def _max_deviation(zflat, width, vx, vy, vz, tris):
    worst = 0.0
    for t in range(tris.shape[0]):
        a = tris[t, 0]
        b = tris[t, 1]
        c = tris[t, 2]
        ax, ay, za = vx[a], vy[a], vz[a]
        bx, by, zb = vx[b], vy[b], vz[b]
        cx, cy, zc = vx[c], vy[c], vz[c]
        x0 = min(ax, min(bx, cx))
        x1 = max(ax, max(bx, cx))
        y0 = min(ay, min(by, cy))
        y1 = max(ay, max(by, cy))
        for y in range(y0, y1 + 1):
            for x in range(x0, x1 + 1):
                w0 = _cross(bx, by, cx, cy, x, y)
                if w0 < 0:
                    continue
                w1 = _cross(cx, cy, ax, ay, x, y)
                if w1 < 0:
                    continue
                w2 = _cross(ax, ay, bx, by, x, y)
                if w2 < 0:
                    continue
                zi = (w0 * za + w1 * zb + w2 * zc) / (w0 + w1 + w2)
                e = zflat[y * width + x] - zi
                if e < 0:
                    e = -e
                if e > worst:
                    worst = e
    return worst


def triangulate_greedy(
    grid: DemGrid, max_error: float = 0.5, max_vertices: int | None = None
) -> TerrainMesh:
    """Insert worst-deviation samples until the mesh is within ``max_error``.

    Starts from the two corner triangles and repeatedly inserts the grid
    sample farthest (vertically) from the current surface, restoring the
    Delaunay property by edge flips after each insertion. Stops when every
    sample deviates at most ``max_error`` meters or ``max_vertices`` is
    reached (default: an eighth of the sample count).
    """
    h, w = grid.values.shape
    n = h * w
    if max_error < 0:
        raise BadParams(f"max_error must be non-negative, got {max_error}")
    if max_vertices is None:
        max_vertices = max(4, n // 8)
    if max_vertices < 4:
        raise BadParams(f"max_vertices must be at least 4, got {max_vertices}")
    max_vertices = min(int(max_vertices), n)
    zflat = np.ascontiguousarray(grid.values, dtype=np.float64).ravel()
    vx, vy, vz, tv, alive = _triangulate(
        zflat, w, h, float(max_error), max_vertices
    )
    tris = np.ascontiguousarray(tv[alive], dtype=np.int32)
    vertices = np.stack(
        [vx.astype(np.float64), vy.astype(np.float64), vz], axis=1
    )
    us = vx / (w - 1)
    vs = 1.0 - vy / (h - 1)
    uvs = np.stack([us, vs], axis=1)
    return TerrainMesh(
        vertices=vertices,
        uvs=uvs,
        triangles=tris,
        max_error_bound=float(max_error),
    )


def mesh_error(mesh: TerrainMesh, grid: DemGrid) -> float:
    """Largest |sample - interpolated mesh height| over all grid samples."""
    h, w = grid.values.shape
    zflat = np.ascontiguousarray(grid.values, dtype=np.float64).ravel()
    vx = mesh.vertices[:, 0].astype(np.int64)
    vy = mesh.vertices[:, 1].astype(np.int64)
    vz = np.ascontiguousarray(mesh.vertices[:, 2])
    tris = mesh.triangles.astype(np.int64)
    return float(_max_deviation(zflat, w, vx, vy, vz, tris))


def export_mesh(mesh: TerrainMesh, format: str) -> bytes:
    """Serialize to binary STL or OBJ text bytes.

    STL carries no texture coordinates; consumers recover uv from vertex
    position. OBJ writes one vt record per vertex and 1-based v/vt faces.
    """
    if format == "stl":
        return _export_stl(mesh)
    if format == "obj":
        return _export_obj(mesh)
    raise BadParams(f"unknown mesh format {format!r}, expected 'stl' or 'obj'")


def _export_stl(mesh: TerrainMesh) -> bytes:
    tris = mesh.triangles
    verts = mesh.vertices
    t = tris.shape[0]
    corners = verts[tris]  # (t, 3, 3)
    normals = np.cross(
        corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]
    )
    lengths = np.linalg.norm(normals, axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        normals = np.where(lengths > 0, normals / lengths, 0.0)
    rec = np.zeros(
        t,
        dtype=np.dtype(
            [("normal", "<f4", 3), ("verts", "<f4", (3, 3)), ("attr", "<u2")]
        ),
    )
    rec["normal"] = normals.astype(np.float32)
    rec["verts"] = corners.astype(np.float32)
    header = b"terrain heightmap TIN".ljust(80, b"\x00")
    return header + struct.pack("<I", t) + rec.tobytes()


def _export_obj(mesh: TerrainMesh) -> bytes:
    lines = []
    for x, y, z in mesh.vertices:
        lines.append(f"v {x:.10g} {y:.10g} {z:.10g}")
    for u, v in mesh.uvs:
        lines.append(f"vt {u:.10g} {v:.10g}")
    for a, b, c in mesh.triangles:
        lines.append(f"f {a + 1}/{a + 1} {b + 1}/{b + 1} {c + 1}/{c + 1}")
    return ("\n".join(lines) + "\n").encode("ascii")
