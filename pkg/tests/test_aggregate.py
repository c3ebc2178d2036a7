"""Annotation fusion: worked examples, per-pixel oracle, symmetry laws."""

import numpy as np
import pytest

from oracles import aggregate_pixel
from topoflood.aggregate import (
    AGGREGATE_VIEW,
    VARIANCE_VIEW,
    AnnotationSet,
    MeanMap,
    OverlaySpec,
    QualityMetrics,
    SoftLabelMap,
    VarianceMap,
    apply_certainty_threshold,
    apply_correction,
    binarize,
    mean_map,
    render_overlay,
    score,
    signed_view,
    soft_labels,
    variance_map,
)
from topoflood.errors import BadParams, DimensionMismatch, NoOverlap, ViewMismatch
from topoflood.raster import DRY, FLOODED, UNLABELED, AnnotationMask


def mask(values):
    return AnnotationMask(np.asarray(values, dtype=np.uint8))


def stack(*flat_rows):
    """AnnotationSet from per-annotator flat label tuples over a 1 x k grid."""
    return AnnotationSet.from_masks([mask([row]) for row in flat_rows])


class TestSignedView:
    def test_mapping(self):
        m = mask([[FLOODED, DRY, UNLABELED]])
        np.testing.assert_array_equal(signed_view(m), [[-1, 1, 0]])

    def test_uniform(self):
        assert (signed_view(mask(np.full((3, 3), FLOODED))) == -1).all()
        assert (signed_view(mask(np.zeros((3, 3)))) == 0).all()


class TestMeanVariance:
    def test_unanimous_flooded_is_minus_one(self):
        s = stack([FLOODED], [FLOODED], [FLOODED])
        assert mean_map(s).values[0, 0] == -1.0
        assert variance_map(s).values[0, 0] == 0.0

    def test_two_to_one_split(self):
        s = stack([FLOODED], [FLOODED], [DRY])
        assert mean_map(s).values[0, 0] == pytest.approx(-1 / 3)

    def test_unlabeled_dilutes_mean(self):
        s = stack([FLOODED], [UNLABELED])
        assert mean_map(s).values[0, 0] == -0.5

    def test_opposite_votes_variance_one(self):
        s = stack([FLOODED], [DRY])
        assert variance_map(s).values[0, 0] == 1.0

    def test_three_way_variance(self):
        s = stack([FLOODED], [UNLABELED], [DRY])
        assert variance_map(s).values[0, 0] == pytest.approx(2 / 3)

    def test_shapes_must_match(self):
        with pytest.raises(DimensionMismatch):
            AnnotationSet.from_masks([mask([[0, 0]]), mask([[0, 0, 0]])])
        with pytest.raises(DimensionMismatch):
            AnnotationSet.from_masks([])


class TestThreshold:
    def test_non_strict_at_tau(self):
        m = MeanMap(np.array([[0.6, 0.61, -0.6, -0.61]]))
        out = apply_certainty_threshold(m, 0.6).values
        np.testing.assert_array_equal(out, [[0.0, 0.61, 0.0, -0.61]])

    def test_tau_zero_keeps_everything_nonzero(self):
        m = MeanMap(np.array([[0.0, 0.001, -0.001]]))
        out = apply_certainty_threshold(m, 0.0).values
        np.testing.assert_array_equal(out, [[0.0, 0.001, -0.001]])

    def test_idempotent(self, rng):
        m = MeanMap(rng.uniform(-1, 1, (6, 6)))
        once = apply_certainty_threshold(m, 0.3)
        twice = apply_certainty_threshold(once, 0.3)
        np.testing.assert_array_equal(once.values, twice.values)

    def test_tau_range(self):
        with pytest.raises(BadParams):
            apply_certainty_threshold(MeanMap(np.zeros((2, 2))), 1.5)


class TestSoftLabels:
    def test_worked_crowd_pixel(self):
        # 3 flooded, 1 dry, 41 unlabeled out of 45 annotators
        rows = [[FLOODED]] * 3 + [[DRY]] + [[UNLABELED]] * 41
        soft = soft_labels(stack(*rows))
        assert soft.flood[0, 0] == 0.75
        assert soft.dry[0, 0] == 0.25

    def test_all_unlabeled_is_undefined(self):
        soft = soft_labels(stack([UNLABELED], [UNLABELED]))
        assert not soft.defined[0, 0]
        assert np.isnan(soft.flood[0, 0]) and np.isnan(soft.dry[0, 0])

    def test_all_dry(self):
        soft = soft_labels(stack([DRY], [DRY]))
        assert (soft.flood[0, 0], soft.dry[0, 0]) == (0.0, 1.0)

    def test_scores_sum_to_one_where_defined(self, rng):
        s = AnnotationSet(rng.integers(0, 3, (7, 5, 5)).astype(np.uint8))
        soft = soft_labels(s)
        d = soft.defined
        np.testing.assert_allclose(soft.flood[d] + soft.dry[d], 1.0)


class TestCorrection:
    def test_empty_correction_is_identity(self):
        soft = soft_labels(stack([FLOODED, DRY, UNLABELED]))
        out = apply_correction(soft, mask([[UNLABELED] * 3]))
        np.testing.assert_array_equal(out.flood, soft.flood)
        np.testing.assert_array_equal(out.dry, soft.dry)

    def test_correction_overwrites_labeled_pixels_only(self):
        soft = soft_labels(stack([FLOODED, FLOODED, FLOODED]))
        out = apply_correction(soft, mask([[UNLABELED, DRY, FLOODED]]))
        assert (out.flood[0, 0], out.dry[0, 0]) == (1.0, 0.0)  # untouched
        assert (out.flood[0, 1], out.dry[0, 1]) == (0.0, 1.0)
        assert (out.flood[0, 2], out.dry[0, 2]) == (1.0, 0.0)

    def test_correction_defines_undefined_pixels(self):
        soft = soft_labels(stack([UNLABELED]))
        out = apply_correction(soft, mask([[FLOODED]]))
        assert (out.flood[0, 0], out.dry[0, 0]) == (1.0, 0.0)

    def test_shape_mismatch(self):
        soft = soft_labels(stack([FLOODED]))
        with pytest.raises(DimensionMismatch):
            apply_correction(soft, mask([[FLOODED, DRY]]))


class TestBinarize:
    def test_higher_score_wins(self):
        soft = SoftLabelMap(
            flood=np.array([[0.75, 0.25, 0.5, np.nan]]),
            dry=np.array([[0.25, 0.75, 0.5, np.nan]]),
        )
        out = binarize(soft)
        np.testing.assert_array_equal(
            out.labels, [[FLOODED, DRY, UNLABELED, UNLABELED]]
        )

    def test_round_trips_single_full_mask(self, rng):
        labels = rng.integers(1, 3, (6, 6)).astype(np.uint8)
        m = mask(labels)
        out = binarize(soft_labels(AnnotationSet.from_masks([m])))
        assert out == m


class TestOracle:
    def test_matches_per_pixel_recomputation(self, rng):
        s = AnnotationSet(rng.integers(0, 3, (45, 6, 7)).astype(np.uint8))
        mean = mean_map(s).values
        var = variance_map(s).values
        soft = soft_labels(s)
        for r in range(6):
            for c in range(7):
                em, ev, ef, ed = aggregate_pixel(s.stack[:, r, c])
                assert abs(mean[r, c] - em) <= 1e-12
                assert abs(var[r, c] - ev) <= 1e-12
                if np.isnan(ef):
                    assert not soft.defined[r, c]
                else:
                    assert abs(soft.flood[r, c] - ef) <= 1e-12
                    assert abs(soft.dry[r, c] - ed) <= 1e-12

    def test_label_swap_symmetry(self, rng):
        arr = rng.integers(0, 3, (9, 5, 8)).astype(np.uint8)
        swapped = arr.copy()
        swapped[arr == FLOODED] = DRY
        swapped[arr == DRY] = FLOODED
        a, b = AnnotationSet(arr), AnnotationSet(swapped)
        np.testing.assert_array_equal(mean_map(a).values, -mean_map(b).values)
        np.testing.assert_array_equal(
            variance_map(a).values, variance_map(b).values
        )
        sa, sb = soft_labels(a), soft_labels(b)
        np.testing.assert_array_equal(sa.flood, sb.dry)
        np.testing.assert_array_equal(sa.dry, sb.flood)


class TestScore:
    def _pair(self):
        # jointly labeled pixels: 3 TF, 2 TD, 1 FF, 2 FD, plus one skipped
        pred = mask([[1, 1, 1, 2, 2, 1, 2, 2, 0]])
        ref = mask([[1, 1, 1, 2, 2, 2, 1, 1, 2]])
        return pred, ref

    def test_confusion_counts(self):
        m = score(*self._pair())
        assert (m.TF, m.TD, m.FF, m.FD) == (3, 2, 1, 2)
        assert m.total == 8

    def test_derived_scores(self):
        m = score(*self._pair())
        assert m.accuracy == 62.5
        assert m.flooded_precision == 0.75
        assert m.flooded_recall == 0.6
        assert m.flooded_f == pytest.approx(2 / 3)
        assert m.dry_precision == 0.5
        assert m.dry_recall == pytest.approx(2 / 3)
        assert m.dry_f == pytest.approx(4 / 7)
        assert m.macro_f == pytest.approx(13 / 21)

    def test_perfect_and_inverted(self):
        full = mask([[FLOODED, DRY, FLOODED, DRY]])
        assert score(full, full).accuracy == 100.0
        flipped = mask([[DRY, FLOODED, DRY, FLOODED]])
        assert score(flipped, full).accuracy == 0.0

    def test_class_swap_keeps_accuracy(self, rng):
        p = mask(rng.integers(0, 3, (8, 8)).astype(np.uint8))
        r = mask(rng.integers(1, 3, (8, 8)).astype(np.uint8))
        m = score(p, r)

        def swap(a):
            out = a.labels.copy()
            out[a.labels == FLOODED] = DRY
            out[a.labels == DRY] = FLOODED
            return AnnotationMask(out)

        ms = score(swap(p), swap(r))
        assert m.accuracy == ms.accuracy
        assert (ms.TF, ms.TD, ms.FF, ms.FD) == (m.TD, m.TF, m.FD, m.FF)

    def test_zero_denominators_report_zero(self):
        m = QualityMetrics(TF=0, TD=5, FF=0, FD=0)
        assert m.accuracy == 100.0
        assert m.flooded_precision == 0.0
        assert m.flooded_f == 0.0
        assert m.macro_f == 0.5 * m.dry_f

    def test_no_overlap(self):
        with pytest.raises(NoOverlap):
            score(mask([[FLOODED, UNLABELED]]), mask([[UNLABELED, DRY]]))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            score(mask([[FLOODED]]), mask([[FLOODED, DRY]]))

    def test_record_and_report(self):
        m = score(*self._pair())
        rec = m.record()
        assert rec["TF"] == 3 and rec["FD"] == 2
        assert rec["accuracy"] == 62.5
        assert rec["flooded"]["precision"] == 0.75
        assert rec["dry"]["recall"] == pytest.approx(2 / 3)
        assert rec["macro_f"] == pytest.approx(13 / 21)
        report = m.text_report()
        assert report.split("\n") == [
            "pixels_scored 8",
            "TF 3",
            "TD 2",
            "FF 1",
            "FD 2",
            "accuracy_percent 62.5000",
            "flooded_precision 0.750000",
            "flooded_recall 0.600000",
            "flooded_f 0.666667",
            "dry_precision 0.500000",
            "dry_recall 0.666667",
            "dry_f 0.571429",
            "macro_f 0.619048",
        ]


class TestOverlay:
    def test_aggregate_endpoints(self):
        m = MeanMap(np.array([[-1.0, 0.0, 1.0]]))
        img = render_overlay(m, OverlaySpec(view=AGGREGATE_VIEW, tau=0.0))
        np.testing.assert_array_equal(
            img[0],
            [[255, 0, 0, 255], [255, 255, 255, 0], [0, 0, 255, 255]],
        )

    def test_aggregate_half_certainty(self):
        img = render_overlay(
            MeanMap(np.array([[0.5]])), OverlaySpec(view=AGGREGATE_VIEW)
        )
        np.testing.assert_array_equal(img[0, 0], [128, 128, 255, 128])

    def test_aggregate_threshold_hides_pixels(self):
        m = MeanMap(np.array([[0.6, -0.7]]))
        img = render_overlay(m, OverlaySpec(view=AGGREGATE_VIEW, tau=0.6))
        assert img[0, 0, 3] == 0
        assert tuple(img[0, 0, :3]) == (255, 255, 255)
        assert img[0, 1, 3] > 0

    def test_variance_frozen_row(self):
        v = VarianceMap(np.array([[0.0, 0.25, 1.0]]))
        img = render_overlay(v, OverlaySpec(view=VARIANCE_VIEW, tau=0.5))
        np.testing.assert_array_equal(
            img[0],
            [[255, 255, 255, 0], [255, 223, 191, 128], [255, 128, 0, 255]],
        )

    def test_variance_zero_everywhere_transparent(self):
        img = render_overlay(
            VarianceMap(np.zeros((2, 2))), OverlaySpec(view=VARIANCE_VIEW, tau=0.7)
        )
        assert (img[:, :, 3] == 0).all()
        assert (img[:, :, :3] == 255).all()

    def test_variance_tau_zero_binary_alpha(self):
        v = VarianceMap(np.array([[0.0, 0.3, 0.9]]))
        img = render_overlay(v, OverlaySpec(view=VARIANCE_VIEW, tau=0.0))
        np.testing.assert_array_equal(img[0, :, 3], [0, 255, 255])

    def test_view_mismatch(self):
        with pytest.raises(ViewMismatch):
            render_overlay(
                VarianceMap(np.zeros((2, 2))), OverlaySpec(view=AGGREGATE_VIEW)
            )
        with pytest.raises(ViewMismatch):
            render_overlay(
                MeanMap(np.zeros((2, 2))), OverlaySpec(view=VARIANCE_VIEW)
            )

    def test_bad_spec(self):
        with pytest.raises(BadParams):
            OverlaySpec(view="heat")
        with pytest.raises(BadParams):
            OverlaySpec(view=AGGREGATE_VIEW, tau=-0.1)
