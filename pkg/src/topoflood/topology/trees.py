"""Merge trees, contour trees, and persistence over scalar grid fields.

Vertices are flat pixel ids (row * width + col). Ties in the scalar field are
broken by pixel id, so every vertex has a unique position in the total order
and the trees are deterministic for a given field.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from ..errors import DegenerateField, FieldMismatch
from . import _kernels

MIN_SADDLE = "min_saddle"
SADDLE_MAX = "saddle_max"
ESSENTIAL = "essential"

KIND_MINIMUM = "minimum"
KIND_SADDLE = "saddle"
KIND_MAXIMUM = "maximum"


@dataclass(frozen=True)
class CriticalPoint:
    vertex: int
    kind: str
    value: float


@dataclass(frozen=True)
class PersistencePair:
    """Birth/death feature pair under the elder rule.

    ``birth_vertex`` is the extremum where the feature appears during its
    sweep, ``death_vertex`` the saddle where it merges into an older feature.
    The essential pair holds the global minimum and maximum.
    """

    birth_vertex: int
    death_vertex: int
    persistence: float
    side: str


class FieldOrder:
    """Total order (value, pixel id) over a 2D scalar field."""

    def __init__(self, values: np.ndarray):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise FieldMismatch(f"expected a 2D field, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise DegenerateField("field contains non-finite values")
        self.values = values
        self.height, self.width = values.shape
        self.n = values.size
        flat = values.ravel()
        self.order = np.lexsort((np.arange(self.n), flat)).astype(np.int64)
        self.pos = np.empty(self.n, dtype=np.int64)
        self.pos[self.order] = np.arange(self.n)
        self.flat = flat

    def value(self, vertex: int) -> float:
        return float(self.flat[vertex])


@dataclass
class MergeTree:
    """Reduced join or split tree with its augmentation intact.

    ``direction`` is "join" (components of sublevel sets, leaves at minima) or
    "split" (superlevel sets, leaves at maxima). ``aug_up`` links every vertex
    to the next vertex of its component in sweep order. ``merge_events`` lists,
    per interior node, the representative extrema of the components that merge
    there, ordered oldest first.
    """

    direction: str
    order: FieldOrder
    aug_up: np.ndarray
    down_count: np.ndarray
    node_vertices: np.ndarray
    node_parent: np.ndarray
    vertex_to_arc: np.ndarray
    arc_lower_node: np.ndarray
    arc_upper_node: np.ndarray
    merge_events: list
    pair_ext: np.ndarray
    pair_saddle: np.ndarray
    sweep_pos: np.ndarray = dc_field(repr=False, default=None)

    @property
    def leaves(self) -> np.ndarray:
        counts = self.down_count[self.node_vertices]
        return self.node_vertices[counts == 0]

    def critical_points(self) -> list[CriticalPoint]:
        return _critical_points(self.order, self.node_vertices)


@dataclass
class ContourTree:
    """Reduced contour tree plus the arc id of every pixel.

    ``arcs`` is an (m, 2) array of (upper, lower) node vertex ids in canonical
    order: sorted by (lower endpoint position, upper endpoint position).
    ``arc_of`` maps every pixel to the arc carrying it. ``epsilon`` is the
    persistence level the tree was simplified to (0 for the full tree).
    """

    order: FieldOrder
    node_vertices: np.ndarray
    arcs: np.ndarray
    arc_of: np.ndarray
    epsilon: float = 0.0

    @property
    def arc_count(self) -> int:
        return int(self.arcs.shape[0])

    def critical_points(self) -> list[CriticalPoint]:
        return _critical_points(self.order, self.node_vertices)


def _critical_points(order: FieldOrder, vertices: np.ndarray) -> list[CriticalPoint]:
    kinds = _kernels.classify(order.pos, order.width, order.height)
    names = {0: KIND_MINIMUM, 1: KIND_SADDLE, 2: KIND_MAXIMUM}
    return [
        CriticalPoint(int(v), names[int(kinds[v])], order.value(int(v)))
        for v in vertices
    ]


def build_merge_tree(order, direction: str) -> MergeTree:
    """Sweep the field and return the reduced join or split tree.

    Accepts either a prepared :class:`FieldOrder` (so join and split share
    one sort) or a normalized field, which must not be degenerate.
    """
    if direction not in ("join", "split"):
        raise ValueError(f"direction must be 'join' or 'split', got {direction!r}")
    if not isinstance(order, FieldOrder):
        if getattr(order, "degenerate", False):
            raise DegenerateField("constant field has no merge tree")
        order = FieldOrder(order.f)
    if direction == "join":
        sweep_order = order.order
        sweep_pos = order.pos
    else:
        sweep_order = order.order[::-1].copy()
        sweep_pos = (order.n - 1) - order.pos
    aug_up, down_count, ev_vertex, ev_offsets, ev_members, pair_ext, pair_sad = (
        _kernels.sweep(sweep_order, sweep_pos, order.width, order.height)
    )
    arc_of, arc_lower, arc_upper, root = _kernels.reduce_merge_tree(
        aug_up, down_count, sweep_order
    )
    node_mask = (down_count != 1) | (aug_up == -1)
    node_vertices = sweep_order[node_mask[sweep_order]]
    parent_map = np.full(order.n, -1, dtype=np.int64)
    parent_map[arc_lower] = arc_upper
    node_parent = parent_map[node_vertices]
    events = [
        (int(ev_vertex[i]), tuple(int(m) for m in ev_members[ev_offsets[i] : ev_offsets[i + 1]]))
        for i in range(ev_vertex.shape[0])
    ]
    return MergeTree(
        direction=direction,
        order=order,
        aug_up=aug_up,
        down_count=down_count,
        node_vertices=node_vertices,
        node_parent=node_parent,
        vertex_to_arc=arc_of,
        arc_lower_node=arc_lower,
        arc_upper_node=arc_upper,
        merge_events=events,
        pair_ext=pair_ext,
        pair_saddle=pair_sad,
        sweep_pos=sweep_pos,
    )


def _check_same_field(a: MergeTree, b: MergeTree) -> None:
    if a.order is not b.order and (
        a.order.values.shape != b.order.values.shape
        or not np.array_equal(a.order.values, b.order.values)
    ):
        raise FieldMismatch("join and split trees come from different fields")


def combine_trees(join: MergeTree, split: MergeTree) -> ContourTree:
    """Merge the augmented join and split trees into the contour tree."""
    if join.direction != "join" or split.direction != "split":
        raise FieldMismatch(
            f"expected a (join, split) pair, got ({join.direction}, {split.direction})"
        )
    _check_same_field(join, split)
    order = join.order
    if order.n == 1:
        raise DegenerateField("cannot build a contour tree from a single vertex")
    edges = _kernels.contour_merge(
        join.aug_up, join.down_count, split.aug_up, split.down_count
    )
    if edges.shape[0] != order.n - 1:
        raise DegenerateField(
            f"contour merge produced {edges.shape[0]} edges for {order.n} vertices"
        )
    arc_of, arc_upper, arc_lower, is_node = _kernels.reduce_contour_tree(
        edges, order.pos, order.n
    )
    arc_of, arcs, node_vertices = _canonicalize(
        order, arc_of, arc_upper, arc_lower, np.flatnonzero(is_node)
    )
    return ContourTree(
        order=order,
        node_vertices=node_vertices,
        arcs=arcs,
        arc_of=arc_of,
        epsilon=0.0,
    )


def _canonicalize(
    order: FieldOrder,
    arc_of: np.ndarray,
    arc_upper: np.ndarray,
    arc_lower: np.ndarray,
    node_vertices: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Renumber arcs by (lower position, upper position) and place node pixels.

    Each node vertex joins its lowest-numbered upward arc when it has one,
    otherwise its lowest-numbered downward arc.
    """
    keys = np.lexsort((order.pos[arc_upper], order.pos[arc_lower]))
    remap = np.empty(arc_upper.shape[0], dtype=np.int32)
    remap[keys] = np.arange(arc_upper.shape[0], dtype=np.int32)
    new_of = np.where(arc_of >= 0, remap[arc_of], -1).astype(np.int32)
    upper = arc_upper[keys]
    lower = arc_lower[keys]
    for aid in range(lower.shape[0]):
        v = lower[aid]
        if new_of[v] == -1:
            new_of[v] = aid
    for aid in range(upper.shape[0]):
        v = upper[aid]
        if new_of[v] == -1:
            new_of[v] = aid
    arcs = np.stack([upper, lower], axis=1)
    node_vertices = node_vertices[np.argsort(order.pos[node_vertices])]
    return new_of, arcs, node_vertices


def compute_persistence(join: MergeTree, split: MergeTree) -> list[PersistencePair]:
    """Elder-rule pairs from both sweeps plus the essential (min, max) pair.

    Returned sorted by (persistence, birth position) so simplification can
    consume the list in order.
    """
    if join.direction != "join" or split.direction != "split":
        raise FieldMismatch(
            f"expected a (join, split) pair, got ({join.direction}, {split.direction})"
        )
    _check_same_field(join, split)
    order = join.order
    pairs = []
    for ext, sad in zip(join.pair_ext, join.pair_saddle):
        b, d = int(ext), int(sad)
        pairs.append(
            PersistencePair(b, d, abs(order.value(d) - order.value(b)), MIN_SADDLE)
        )
    for ext, sad in zip(split.pair_ext, split.pair_saddle):
        b, d = int(ext), int(sad)
        pairs.append(
            PersistencePair(b, d, abs(order.value(d) - order.value(b)), SADDLE_MAX)
        )
    gmin = int(order.order[0])
    gmax = int(order.order[-1])
    pairs.append(
        PersistencePair(
            gmin, gmax, order.value(gmax) - order.value(gmin), ESSENTIAL
        )
    )
    pairs.sort(key=lambda p: (p.persistence, order.pos[p.birth_vertex]))
    return pairs


class _ArcSet:
    """Mutable arc structure used during simplification.

    Arcs keep their original ids; a union-find tracks which surviving arc
    absorbed each collapsed one so pixel labels can be rewritten at the end.
    """

    def __init__(self, tree: ContourTree):
        self.order = tree.order
        m = tree.arc_count
        self.upper = [int(v) for v in tree.arcs[:, 0]]
        self.lower = [int(v) for v in tree.arcs[:, 1]]
        self.alive = [True] * m
        self.uf = list(range(m))
        self.node_arcs: dict[int, list[int]] = {}
        for aid in range(m):
            self.node_arcs.setdefault(self.upper[aid], []).append(aid)
            self.node_arcs.setdefault(self.lower[aid], []).append(aid)

    def find(self, aid: int) -> int:
        root = aid
        while self.uf[root] != root:
            root = self.uf[root]
        while self.uf[aid] != root:
            self.uf[aid], aid = root, self.uf[aid]
        return root

    def absorb(self, dead: int, into: int) -> None:
        self.uf[self.find(dead)] = self.find(into)
        self.alive[dead] = False

    def key(self, aid: int) -> tuple[int, int]:
        pos = self.order.pos
        return (int(pos[self.lower[aid]]), int(pos[self.upper[aid]]))

    def other_end(self, aid: int, vertex: int) -> int:
        return self.lower[aid] if self.upper[aid] == vertex else self.upper[aid]

    def try_contract(self, vertex: int) -> None:
        """Splice out ``vertex`` if exactly one arc enters and one leaves it."""
        arcs = self.node_arcs.get(vertex)
        if arcs is None or len(arcs) != 2:
            return
        a, b = arcs
        a_up = self.lower[a] == vertex  # arc a continues upward from vertex
        b_up = self.lower[b] == vertex
        if a_up == b_up:
            return
        up_arc = a if a_up else b
        down_arc = b if a_up else a
        # keep the upward arc, extend it down to the lower arc's far end
        far = self.lower[down_arc]
        self.lower[up_arc] = far
        self.absorb(down_arc, up_arc)
        fl = self.node_arcs[far]
        fl[fl.index(down_arc)] = up_arc
        del self.node_arcs[vertex]


def simplify_tree(
    tree: ContourTree, pairs: list[PersistencePair], epsilon: float
) -> ContourTree:
    """Collapse every leaf feature with persistence below ``epsilon``.

    Pairs are processed in ascending (persistence, birth position) order; by
    the branch decomposition property each pair's extremum is a leaf of the
    current tree when its turn comes. The leaf arc is merged into the saddle's
    continuing arc (the one running the same way past the saddle, falling back
    to any other arc at degenerate saddles), and saddles left with one arc up
    and one down are spliced out. ``epsilon`` = 0 returns the input tree.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    if epsilon == 0:
        return tree
    order = tree.order
    arcs = _ArcSet(tree)
    todo = [
        p
        for p in sorted(pairs, key=lambda p: (p.persistence, order.pos[p.birth_vertex]))
        if p.side != ESSENTIAL and p.persistence < epsilon
    ]
    # pairs whose extremum is no longer a node of this (pre-simplified) tree
    # were collapsed in an earlier pass and are skipped
    pending = [p for p in todo if p.birth_vertex in arcs.node_arcs]
    while pending:
        deferred = []
        progress = False
        for p in pending:
            ext = p.birth_vertex
            ext_arcs = arcs.node_arcs.get(ext)
            if ext_arcs is None:
                continue
            if len(ext_arcs) != 1:
                deferred.append(p)
                continue
            leaf = ext_arcs[0]
            saddle = arcs.other_end(leaf, ext)
            siblings = [a for a in arcs.node_arcs[saddle] if a != leaf]
            if not siblings:
                # the tree is down to this single arc; nothing to merge into
                continue
            leaf_up = arcs.lower[leaf] == ext  # extremum is a minimum
            same_way = [
                a
                for a in siblings
                if (arcs.lower[a] == saddle) == leaf_up
            ]
            pool = same_way if same_way else siblings
            target = min(pool, key=arcs.key)
            arcs.absorb(leaf, target)
            arcs.node_arcs[saddle].remove(leaf)
            del arcs.node_arcs[ext]
            arcs.try_contract(saddle)
            progress = True
        if not progress and deferred:
            raise DegenerateField(
                f"simplification stalled with {len(deferred)} pairs below epsilon"
            )
        pending = deferred

    keep = [aid for aid in range(len(arcs.alive)) if arcs.alive[aid]]
    upper = np.array([arcs.upper[a] for a in keep], dtype=np.int64)
    lower = np.array([arcs.lower[a] for a in keep], dtype=np.int64)
    # rewrite pixel labels through the union-find, then canonicalize
    root_of = np.array([arcs.find(a) for a in range(len(arcs.alive))], dtype=np.int64)
    compact = np.full(len(arcs.alive), -1, dtype=np.int32)
    for i, a in enumerate(keep):
        compact[a] = i
    flat_of = compact[root_of[tree.arc_of]]
    node_vertices = np.unique(np.concatenate([upper, lower]))
    new_of, new_arcs, node_vertices = _canonicalize(
        order, flat_of, upper, lower, node_vertices
    )
    return ContourTree(
        order=order,
        node_vertices=node_vertices,
        arcs=new_arcs,
        arc_of=new_of,
        epsilon=float(epsilon),
    )
