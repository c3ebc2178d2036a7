import json

import numpy as np
import pytest

import oracles
from conftest import make_field
from topoflood.errors import (
    BadThresholds,
    DegenerateField,
    FieldMismatch,
    OutOfBounds,
    ParseError,
)
from topoflood.topology import (
    DEFAULT_THRESHOLDS,
    ESSENTIAL,
    MIN_SADDLE,
    SADDLE_MAX,
    FieldOrder,
    build_merge_tree,
    build_multiscale,
    check_thresholds,
    combine_trees,
    compute_persistence,
    export_segment_ids,
    parse_segmentation,
    segment_borders,
    segment_field,
    segment_pixels,
    segmentation_manifest,
    simplify_tree,
)

# Worked 1-D example used throughout: values 0, 1, 0.2, 0.8, 0.4 at pixels
# 0..4. Expected events, pairs, and arcs below were derived by hand and
# cross-checked against the oracle component tracker before the library ran.
RIDGE = [[0.0, 1.0, 0.2, 0.8, 0.4]]


def _trees(values):
    order = FieldOrder(np.asarray(values, dtype=np.float64))
    return order, build_merge_tree(order, "join"), build_merge_tree(order, "split")


class TestWorkedExample:
    def test_join_events(self):
        _, join, _ = _trees(RIDGE)
        assert join.merge_events == [(3, (2, 4)), (1, (0, 2))]
        assert join.merge_events == oracles.merge_events(np.array(RIDGE), "join")

    def test_split_events(self):
        _, _, split = _trees(RIDGE)
        assert split.merge_events == [(2, (1, 3))]
        assert split.merge_events == oracles.merge_events(np.array(RIDGE), "split")

    def test_persistence_pairs(self):
        _, join, split = _trees(RIDGE)
        pairs = compute_persistence(join, split)
        got = [(p.birth_vertex, p.death_vertex, round(p.persistence, 12), p.side) for p in pairs]
        assert got == [
            (4, 3, 0.4, MIN_SADDLE),
            (3, 2, 0.6, SADDLE_MAX),
            (2, 1, 0.8, MIN_SADDLE),
            (0, 1, 1.0, ESSENTIAL),
        ]

    def test_contour_tree_shape(self):
        order, join, split = _trees(RIDGE)
        ct = combine_trees(join, split)
        assert sorted(ct.node_vertices.tolist()) == [0, 1, 2, 3, 4]
        # arcs in canonical order, (upper, lower) vertex pairs
        assert ct.arcs.tolist() == [[1, 0], [3, 2], [1, 2], [3, 4]]
        assert ct.arc_of.tolist() == [0, 0, 1, 1, 3]

    def test_simplified_at_0p7(self):
        order, join, split = _trees(RIDGE)
        ct = combine_trees(join, split)
        pairs = compute_persistence(join, split)
        # collapses the pers-0.4 leaf (pixel 4) and the pers-0.6 max (pixel 3);
        # the saddle at pixel 2 contracts away, leaving min-saddle-max chain
        simp = simplify_tree(ct, pairs, 0.7)
        assert sorted(simp.node_vertices.tolist()) == [0, 1, 2]
        assert simp.arcs.tolist() == [[1, 0], [1, 2]]

    def test_simplified_at_1(self):
        order, join, split = _trees(RIDGE)
        ct = combine_trees(join, split)
        pairs = compute_persistence(join, split)
        simp = simplify_tree(ct, pairs, 1.0)
        # only the essential extremes remain: one arc covering every pixel
        assert simp.arcs.shape == (1, 2)
        assert simp.arcs.tolist() == [[1, 0]]
        seg = segment_field(simp, make_field(RIDGE))
        assert seg.segment_count == 1
        assert (seg.segment_ids == 0).all()

    def test_segment_field_rejects_other_field(self):
        order, join, split = _trees(RIDGE)
        ct = combine_trees(join, split)
        with pytest.raises(FieldMismatch):
            segment_field(ct, make_field([[0.0, 0.5, 1.0, 0.2, 0.4]]))

    def test_epsilon_zero_returns_input(self):
        order, join, split = _trees(RIDGE)
        ct = combine_trees(join, split)
        pairs = compute_persistence(join, split)
        simp = simplify_tree(ct, pairs, 0.0)
        np.testing.assert_array_equal(simp.arcs, ct.arcs)
        np.testing.assert_array_equal(simp.arc_of, ct.arc_of)


class TestFieldOrder:
    def test_tie_break_by_index(self):
        order = FieldOrder(np.array([[0.5, 0.2], [0.2, 0.1]]))
        assert order.order.tolist() == [3, 1, 2, 0]
        assert order.pos.tolist() == [3, 1, 2, 0]

    def test_degenerate_field_rejected(self):
        with pytest.raises(DegenerateField):
            build_merge_tree(make_field(np.zeros((3, 3))), "join")

    def test_nonfinite_rejected(self):
        with pytest.raises(DegenerateField):
            FieldOrder(np.array([[0.0, np.nan], [0.5, 1.0]]))
        with pytest.raises(FieldMismatch):
            FieldOrder(np.arange(4.0))

    def test_merge_tree_accepts_field_directly(self):
        field = make_field(RIDGE)
        via_field = build_merge_tree(field, "join")
        via_order = build_merge_tree(FieldOrder(field.f), "join")
        assert via_field.merge_events == via_order.merge_events


class TestMergeEventsRandom:
    def test_matches_oracle(self, rng):
        for _ in range(60):
            f = rng.random((6, 7))
            order = FieldOrder(f)
            for direction in ("join", "split"):
                tree = build_merge_tree(order, direction)
                assert tree.merge_events == oracles.merge_events(f, direction)

    def test_events_with_ties(self, rng):
        # plateaus: repeated values break ties by flat index
        for _ in range(30):
            f = rng.integers(0, 4, size=(5, 6)).astype(np.float64)
            if f.min() == f.max():
                continue
            order = FieldOrder(f)
            for direction in ("join", "split"):
                tree = build_merge_tree(order, direction)
                assert tree.merge_events == oracles.merge_events(f, direction)

    def test_monotone_ramp_single_arc(self):
        # 1x4 ramp: one minimum, no interior events, single reduced arc
        tree = build_merge_tree(make_field([[0.0, 1 / 3, 2 / 3, 1.0]]), "join")
        assert tree.merge_events == []
        assert tree.node_vertices.tolist() == [0, 3]
        assert (tree.vertex_to_arc == tree.vertex_to_arc[0]).all()

    def test_split_mirrors_join_of_flipped(self, rng):
        # with distinct values, the split tree of f is the join tree of 1 - f
        for _ in range(20):
            f = rng.random((6, 6))
            split = build_merge_tree(FieldOrder(f), "split")
            join_flipped = build_merge_tree(FieldOrder(1.0 - f), "join")
            assert split.merge_events == join_flipped.merge_events
            assert sorted(split.node_vertices.tolist()) == sorted(
                join_flipped.node_vertices.tolist()
            )


class TestContourTreeRandom:
    def test_arc_count_matches_level_sets(self, rng):
        # the number of arcs spanning any regular level equals the number of
        # connected contour components at that level
        for _ in range(15):
            f = rng.random((5, 5))
            order = FieldOrder(f)
            ct = combine_trees(
                build_merge_tree(order, "join"), build_merge_tree(order, "split")
            )
            flat = f.ravel()
            lo = flat[ct.arcs[:, 1]]
            hi = flat[ct.arcs[:, 0]]
            for _ in range(4):
                level = float(rng.uniform(flat.min(), flat.max()))
                if (flat == level).any():
                    continue
                spanning = int(np.count_nonzero((lo < level) & (level < hi)))
                assert spanning == oracles.contour_components(f, level)

    def test_every_pixel_on_one_arc(self, rng):
        f = rng.random((8, 8))
        order = FieldOrder(f)
        ct = combine_trees(
            build_merge_tree(order, "join"), build_merge_tree(order, "split")
        )
        assert ct.arc_of.shape == (64,)
        assert (ct.arc_of >= 0).all()
        assert (ct.arc_of < ct.arcs.shape[0]).all()
        # a pixel's value lies within its arc's closed span
        flat = f.ravel()
        lo = flat[ct.arcs[ct.arc_of, 1]]
        hi = flat[ct.arcs[ct.arc_of, 0]]
        assert ((flat >= lo) & (flat <= hi)).all()

    def test_tree_edge_count(self, rng):
        # a contour tree on n distinct-valued vertices has exactly n-1 edges
        # before chain reduction; after reduction, nodes-1 arcs
        f = rng.random((7, 6))
        order = FieldOrder(f)
        ct = combine_trees(
            build_merge_tree(order, "join"), build_merge_tree(order, "split")
        )
        assert ct.arcs.shape[0] == ct.node_vertices.shape[0] - 1


class TestPersistence:
    def test_pair_counts(self, rng):
        for _ in range(40):
            f = rng.random((6, 6))
            order = FieldOrder(f)
            join = build_merge_tree(order, "join")
            split = build_merge_tree(order, "split")
            pairs = compute_persistence(join, split)
            n_min, n_max = oracles.local_extrema(f)
            non_essential = [p for p in pairs if p.side != ESSENTIAL]
            essential = [p for p in pairs if p.side == ESSENTIAL]
            assert len(non_essential) == (n_min - 1) + (n_max - 1)
            assert len(essential) == 1

    def test_essential_pair_is_global_extremes(self, rng):
        f = rng.random((6, 6))
        order = FieldOrder(f)
        pairs = compute_persistence(
            build_merge_tree(order, "join"), build_merge_tree(order, "split")
        )
        ess = [p for p in pairs if p.side == ESSENTIAL][0]
        assert ess.birth_vertex == int(np.argmin(f.ravel()))
        assert ess.death_vertex == int(np.argmax(f.ravel()))
        assert ess.persistence == pytest.approx(float(f.max() - f.min()))

    def test_pairs_sorted_by_persistence(self, rng):
        f = rng.random((6, 6))
        order = FieldOrder(f)
        pairs = compute_persistence(
            build_merge_tree(order, "join"), build_merge_tree(order, "split")
        )
        pers = [p.persistence for p in pairs]
        assert pers == sorted(pers)


class TestSimplify:
    def test_surviving_features(self, rng):
        # a feature's extremum stays a node of the simplified tree exactly
        # when its pair persists past epsilon; so the minimum surviving
        # non-essential persistence is >= epsilon
        for _ in range(25):
            f = rng.random((8, 8))
            order = FieldOrder(f)
            join = build_merge_tree(order, "join")
            split = build_merge_tree(order, "split")
            ct = combine_trees(join, split)
            pairs = compute_persistence(join, split)
            for eps in (0.05, 0.15, 0.4):
                simp = simplify_tree(ct, pairs, eps)
                nodes = set(simp.node_vertices.tolist())
                for p in pairs:
                    if p.side == ESSENTIAL:
                        assert p.birth_vertex in nodes
                        assert p.death_vertex in nodes
                    elif p.persistence < eps:
                        # birth_vertex is the extremum on both sides
                        assert p.birth_vertex not in nodes
                    else:
                        assert p.birth_vertex in nodes

    def test_incremental_equals_direct(self, rng):
        for _ in range(15):
            f = rng.random((9, 9))
            order = FieldOrder(f)
            join = build_merge_tree(order, "join")
            split = build_merge_tree(order, "split")
            ct = combine_trees(join, split)
            pairs = compute_persistence(join, split)
            direct = simplify_tree(ct, pairs, 0.3)
            stepped = ct
            for eps in (0.05, 0.12, 0.3):
                stepped = simplify_tree(stepped, pairs, eps)
            np.testing.assert_array_equal(direct.arcs, stepped.arcs)
            np.testing.assert_array_equal(direct.arc_of, stepped.arc_of)


class TestSegmentation:
    def test_threshold_ladder_guard(self):
        check_thresholds(DEFAULT_THRESHOLDS)
        with pytest.raises(BadThresholds):
            check_thresholds(())
        with pytest.raises(BadThresholds):
            check_thresholds((0.01, 0.02))  # must start at 0
        with pytest.raises(BadThresholds):
            check_thresholds((0.0, 0.02, 0.02))  # strictly increasing

    def test_default_ladder(self):
        assert DEFAULT_THRESHOLDS == (0.0, 0.01, 0.02, 0.04, 0.08, 0.16)

    def test_total_coverage_and_determinism(self, rng):
        f = rng.random((10, 10))
        ms1 = build_multiscale(make_field(f), (0.0, 0.05, 0.2))
        ms2 = build_multiscale(make_field(f.copy()), (0.0, 0.05, 0.2))
        for a, b in zip(ms1.levels, ms2.levels):
            assert (a.segment_ids >= 0).all()
            assert (a.segment_ids < a.segment_count).all()
            np.testing.assert_array_equal(a.segment_ids, b.segment_ids)

    def test_canonical_arc_order(self, rng):
        # segment ids follow arcs sorted by the lower endpoint's sweep
        # position, so identical fields always number segments identically
        f = rng.random((8, 8))
        order = FieldOrder(f)
        ct = combine_trees(
            build_merge_tree(order, "join"), build_merge_tree(order, "split")
        )
        lower_pos = order.pos[ct.arcs[:, 1]]
        assert (np.diff(lower_pos) >= 0).all()

    def test_hierarchy_nesting(self, rng):
        f = rng.random((12, 12))
        ms = build_multiscale(make_field(f), DEFAULT_THRESHOLDS)
        assert ms.thresholds == DEFAULT_THRESHOLDS
        counts = [lv.segment_count for lv in ms.levels]
        assert counts == sorted(counts, reverse=True)
        for fine, coarse in zip(ms.levels, ms.levels[1:]):
            mapping = {}
            for fid, cid in zip(fine.segment_ids.ravel(), coarse.segment_ids.ravel()):
                assert mapping.setdefault(int(fid), int(cid)) == int(cid)

    def test_level_out_of_bounds(self, rng):
        ms = build_multiscale(make_field(rng.random((6, 6))), (0.0, 0.1))
        ms.level(1)
        with pytest.raises(OutOfBounds):
            ms.level(2)
        with pytest.raises(OutOfBounds):
            ms.level(-1)

    def test_add_level(self, rng):
        f = rng.random((8, 8))
        ms = build_multiscale(make_field(f), (0.0, 0.05))
        seg = ms.add_level(0.3)
        assert seg.epsilon == 0.3
        assert ms.thresholds == (0.0, 0.05, 0.3)
        # matches building the ladder in one shot
        direct = build_multiscale(make_field(f), (0.0, 0.05, 0.3))
        np.testing.assert_array_equal(
            ms.level(2).segment_ids, direct.level(2).segment_ids
        )
        with pytest.raises(BadThresholds):
            ms.add_level(0.05)
        with pytest.raises(BadThresholds):
            ms.add_level(0.2)

    def test_degenerate_field_single_segment(self):
        field = make_field(np.zeros((4, 4)))
        ms = build_multiscale(field, (0.0, 0.1))
        for level in ms.levels:
            assert level.segment_count == 1
            assert (level.segment_ids == 0).all()

    def test_segment_pixels_sorted(self, rng):
        ms = build_multiscale(make_field(rng.random((9, 9))), (0.0,))
        seg = ms.level(0)
        covered = np.zeros(81, dtype=bool)
        for r in range(9):
            for c in range(9):
                pix = segment_pixels(seg, (r, c))
                assert r * 9 + c in pix
                if pix.size > 1:
                    assert (np.diff(pix) > 0).all()
                # same segment id everywhere in the returned set
                assert len(set(seg.segment_ids.ravel()[pix])) == 1
                covered[pix] = True
        assert covered.all()
        with pytest.raises(OutOfBounds):
            segment_pixels(seg, (9, 0))

    def test_segment_borders(self):
        ids = np.array([[0, 0, 1], [0, 0, 1], [2, 2, 1]], dtype=np.int32)
        from topoflood.topology.segmentation import SegmentationMap

        seg = SegmentationMap(epsilon=0.0, segment_ids=ids, segment_count=3)
        border = segment_borders(seg)
        # every pixel adjacent (4-conn) to a different segment is border
        expect = np.array(
            [
                [0, 1, 1],
                [1, 1, 1],
                [1, 1, 1],
            ],
            dtype=bool,
        )
        np.testing.assert_array_equal(border, expect)


class TestSegmentationSerialization:
    def test_round_trip(self, rng):
        ms = build_multiscale(make_field(rng.random((6, 8))), (0.0, 0.1))
        seg = ms.level(1)
        blob = export_segment_ids(seg)
        assert len(blob) == 6 * 8 * 4
        manifest = segmentation_manifest(seg)
        assert manifest == {
            "epsilon": 0.1,
            "segment_count": seg.segment_count,
            "width": 8,
            "height": 6,
        }
        back = parse_segmentation(blob, json.dumps(manifest))
        np.testing.assert_array_equal(back.segment_ids, seg.segment_ids)
        assert back.epsilon == seg.epsilon
        # dict manifests work without the JSON round trip
        again = parse_segmentation(blob, manifest)
        np.testing.assert_array_equal(again.segment_ids, seg.segment_ids)

    def test_parse_rejects_bad_payloads(self, rng):
        ms = build_multiscale(make_field(rng.random((4, 4))), (0.0,))
        seg = ms.level(0)
        blob = export_segment_ids(seg)
        manifest = json.dumps(segmentation_manifest(seg))
        with pytest.raises(ParseError):
            parse_segmentation(blob[:-1], manifest)
        with pytest.raises(ParseError):
            parse_segmentation(blob, "{not json")
        with pytest.raises(ParseError):
            parse_segmentation(blob, '{"epsilon": 0}')
