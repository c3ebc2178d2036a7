"""Numba kernels for the topology sweeps.

All kernels work on flat vertex ids (idx = row * width + col) and compare
vertices only through ``rank``, the position of each vertex in the total
order (value, then index). Grid connectivity is the 6-neighborhood of the
Freudenthal triangulation: the 4 axis neighbors plus the (+1,+1) and (-1,-1)
diagonals.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# (dr, dc) offsets of the 6-neighborhood.
_NBR = np.array(
    [(-1, 0), (1, 0), (0, -1), (0, 1), (1, 1), (-1, -1)], dtype=np.int64
)


@njit(cache=True)
def _find(parent, v):
    root = v
    while parent[root] != root:
        root = parent[root]
    while parent[v] != root:
        nxt = parent[v]
        parent[v] = root
        v = nxt
    return root


@njit(cache=True)
def sweep(order, pos, width, height):
    """Track connected components while adding vertices in ``order``.

    ``pos[v]`` is the position of vertex v in ``order``; a vertex counts as
    processed when its position is smaller than the current one. Returns, per
    vertex: the augmented-tree uplink (next vertex its component touches, -1
    for the last vertex), the number of components merging there, and the
    merge events with elder-rule death pairs.
    """
    n = order.shape[0]
    parent = np.full(n, -1, dtype=np.int64)
    comp_top = np.empty(n, dtype=np.int64)
    comp_elder = np.empty(n, dtype=np.int64)

    aug_up = np.full(n, -1, dtype=np.int64)
    down_count = np.zeros(n, dtype=np.int32)

    ev_vertex = np.empty(n, dtype=np.int64)
    ev_offsets = np.empty(n + 1, dtype=np.int64)
    ev_members = np.empty(2 * n, dtype=np.int64)
    n_events = 0
    members_used = 0
    ev_offsets[0] = 0

    pair_ext = np.empty(n, dtype=np.int64)
    pair_sad = np.empty(n, dtype=np.int64)
    n_pairs = 0

    roots = np.empty(6, dtype=np.int64)

    for i in range(n):
        v = order[i]
        r = v // width
        c = v % width
        k = 0
        for t in range(6):
            rr = r + _NBR[t, 0]
            cc = c + _NBR[t, 1]
            if rr < 0 or rr >= height or cc < 0 or cc >= width:
                continue
            w = rr * width + cc
            if pos[w] < i:
                root = _find(parent, w)
                dup = False
                for j in range(k):
                    if roots[j] == root:
                        dup = True
                        break
                if not dup:
                    roots[k] = root
                    k += 1
        down_count[v] = k
        if k == 0:
            parent[v] = v
            comp_top[v] = v
            comp_elder[v] = v
            continue
        if k >= 2:
            # merge event: record member elders sorted by sweep position
            ev_vertex[n_events] = v
            elder = comp_elder[roots[0]]
            for j in range(k):
                e = comp_elder[roots[j]]
                if pos[e] < pos[elder]:
                    elder = e
                ev_members[members_used + j] = e
            # insertion sort the k member elders by position
            for a in range(1, k):
                key = ev_members[members_used + a]
                b = a - 1
                while b >= 0 and pos[ev_members[members_used + b]] > pos[key]:
                    ev_members[members_used + b + 1] = ev_members[members_used + b]
                    b -= 1
                ev_members[members_used + b + 1] = key
            members_used += k
            ev_offsets[n_events + 1] = members_used
            n_events += 1
            # elder rule: every younger representative dies here
            for j in range(k):
                e = comp_elder[roots[j]]
                if e != elder:
                    pair_ext[n_pairs] = e
                    pair_sad[n_pairs] = v
                    n_pairs += 1
        else:
            elder = comp_elder[roots[0]]
        for j in range(k):
            root = roots[j]
            aug_up[comp_top[root]] = v
            parent[root] = v
        parent[v] = v
        comp_top[v] = v
        comp_elder[v] = elder

    return (
        aug_up,
        down_count,
        ev_vertex[:n_events],
        ev_offsets[: n_events + 1],
        ev_members[:members_used],
        pair_ext[:n_pairs],
        pair_sad[:n_pairs],
    )


@njit(cache=True)
def reduce_merge_tree(aug_up, down_count, order):
    """Contract regular chains of an augmented merge tree into arcs.

    A vertex is a node when its merge count differs from 1 or it is the sweep
    root. Each non-root node opens the arc toward its parent node; chain
    interiors and the node itself belong to that arc. The root joins the arc
    of its first child (arc ids are created in sweep order, which is the
    (value, index) order of the arc's origin node).
    """
    n = order.shape[0]
    is_node = np.zeros(n, dtype=np.bool_)
    for v in range(n):
        if down_count[v] != 1 or aug_up[v] == -1:
            is_node[v] = True

    arc_of = np.full(n, -1, dtype=np.int32)
    arc_lower = np.empty(n, dtype=np.int64)
    arc_upper = np.empty(n, dtype=np.int64)
    n_arcs = 0
    root = -1
    for i in range(n):
        v = order[i]
        if not is_node[v]:
            continue
        if aug_up[v] == -1:
            root = v
            continue
        aid = n_arcs
        n_arcs += 1
        arc_lower[aid] = v
        arc_of[v] = aid
        w = aug_up[v]
        while not is_node[w]:
            arc_of[w] = aid
            w = aug_up[w]
        arc_upper[aid] = w
    # the sweep root belongs to the lowest-origin arc that ends at it
    for aid in range(n_arcs):
        if arc_upper[aid] == root:
            arc_of[root] = aid
            break
    return arc_of, arc_lower[:n_arcs], arc_upper[:n_arcs], root


@njit(cache=True)
def _resolve(link, alive, u):
    while u != -1 and not alive[u]:
        u = link[u]
    return u


@njit(cache=True)
def contour_merge(join_up, join_down, split_down, split_up):
    """Combine augmented join and split trees into augmented contour tree edges.

    Standard leaf-peeling merge: a vertex with join merge count jd and split
    merge count su is peelable when jd + su == 1. Upper leaves (su == 0) take
    their split-tree down edge, lower leaves their join-tree up edge; the
    peeled vertex is removed from both trees (regular removals keep neighbor
    counts unchanged and are resolved lazily by chain-skipping).
    """
    n = join_up.shape[0]
    jd = join_down.astype(np.int64).copy()
    su = split_up.astype(np.int64).copy()
    alive_j = np.ones(n, dtype=np.bool_)
    alive_s = np.ones(n, dtype=np.bool_)
    done = np.zeros(n, dtype=np.bool_)

    queue = np.empty(n, dtype=np.int64)
    head = 0
    tail = 0
    for v in range(n):
        if jd[v] + su[v] == 1:
            queue[tail] = v
            tail += 1

    edges = np.empty((n - 1, 2), dtype=np.int64)
    ne = 0
    remaining = n
    while remaining > 1 and head < tail:
        x = queue[head]
        head += 1
        if done[x] or jd[x] + su[x] != 1:
            continue
        if su[x] == 0:
            y = _resolve(split_down, alive_s, split_down[x])
            if y == -1:
                break
            su[y] -= 1
            alive_s[x] = False
            alive_j[x] = False
        else:
            y = _resolve(join_up, alive_j, join_up[x])
            if y == -1:
                break
            jd[y] -= 1
            alive_j[x] = False
            alive_s[x] = False
        edges[ne, 0] = x
        edges[ne, 1] = y
        ne += 1
        done[x] = True
        remaining -= 1
        if not done[y] and jd[y] + su[y] == 1:
            queue[tail] = y
            tail += 1
    return edges[:ne]


@njit(cache=True)
def reduce_contour_tree(edges, pos, n):
    """Contract regular vertices of the augmented contour tree into arcs.

    Returns per-vertex arc ids (nodes still unassigned, -1), the arc endpoint
    lists, and the node mask. Arc ids follow no particular order here; the
    caller canonicalizes them.
    """
    m = edges.shape[0]
    updeg = np.zeros(n, dtype=np.int32)
    downdeg = np.zeros(n, dtype=np.int32)
    for e in range(m):
        a = edges[e, 0]
        b = edges[e, 1]
        if pos[a] < pos[b]:
            updeg[a] += 1
            downdeg[b] += 1
        else:
            updeg[b] += 1
            downdeg[a] += 1
    is_node = np.empty(n, dtype=np.bool_)
    for v in range(n):
        is_node[v] = not (updeg[v] == 1 and downdeg[v] == 1)

    # down-edge structure: single slot for regular vertices, CSR for nodes
    reg_down = np.full(n, -1, dtype=np.int64)
    node_down_count = np.zeros(n, dtype=np.int64)
    for e in range(m):
        a = edges[e, 0]
        b = edges[e, 1]
        hi = a if pos[a] > pos[b] else b
        lo = b if hi == a else a
        if is_node[hi]:
            node_down_count[hi] += 1
        else:
            reg_down[hi] = lo
    offsets = np.zeros(n + 1, dtype=np.int64)
    for v in range(n):
        offsets[v + 1] = offsets[v] + node_down_count[v]
    fill = offsets[:-1].copy()
    node_down = np.empty(m, dtype=np.int64)
    for e in range(m):
        a = edges[e, 0]
        b = edges[e, 1]
        hi = a if pos[a] > pos[b] else b
        lo = b if hi == a else a
        if is_node[hi]:
            node_down[fill[hi]] = lo
            fill[hi] += 1

    arc_of = np.full(n, -1, dtype=np.int32)
    arc_upper = np.empty(m, dtype=np.int64)
    arc_lower = np.empty(m, dtype=np.int64)
    n_arcs = 0
    for u in range(n):
        if not is_node[u]:
            continue
        for s in range(offsets[u], offsets[u + 1]):
            v = node_down[s]
            aid = n_arcs
            n_arcs += 1
            arc_upper[aid] = u
            while not is_node[v]:
                arc_of[v] = aid
                v = reg_down[v]
            arc_lower[aid] = v
    return arc_of, arc_upper[:n_arcs], arc_lower[:n_arcs], is_node


@njit(cache=True)
def classify(pos, width, height):
    """Per-vertex critical kind under the total order: 0 min, 1 saddle-or-regular, 2 max."""
    n = width * height
    kinds = np.empty(n, dtype=np.int8)
    for v in range(n):
        r = v // width
        c = v % width
        lower = 0
        higher = 0
        for t in range(6):
            rr = r + _NBR[t, 0]
            cc = c + _NBR[t, 1]
            if rr < 0 or rr >= height or cc < 0 or cc >= width:
                continue
            w = rr * width + cc
            if pos[w] < pos[v]:
                lower += 1
            else:
                higher += 1
        if lower == 0:
            kinds[v] = 0
        elif higher == 0:
            kinds[v] = 2
        else:
            kinds[v] = 1
    return kinds
