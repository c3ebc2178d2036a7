"""
Fusing a crowd of flood masks
=============================

Simulate 45 annotators labeling the same flooded basin with different
diligence, fuse their masks into mean and variance maps, and render the
review overlays.
"""

import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from topoflood.aggregate import (
    AnnotationSet,
    OverlaySpec,
    apply_certainty_threshold,
    binarize,
    mean_map,
    render_overlay,
    score,
    soft_labels,
    variance_map,
)
from topoflood.raster import DRY, FLOODED, UNLABELED, AnnotationMask

rng = np.random.default_rng(45)
h, w = 64, 96

# ground truth: flooded disc in a dry plain
y, x = np.mgrid[0:h, 0:w]
truth = np.where(np.hypot(x - 40, y - 32) < 20, FLOODED, DRY).astype(np.uint8)

masks = []
for _ in range(45):
    m = truth.copy()
    # each annotator misses a random border band and never labels the
    # far right margin
    wobble = np.hypot(x - 40, y - 32) + rng.normal(0, 2.5, (h, w))
    m[(wobble > 18) & (wobble < 22)] = rng.choice([FLOODED, DRY, UNLABELED])
    m[:, 88 + rng.integers(0, 8):] = UNLABELED
    masks.append(AnnotationMask(m))

stack = AnnotationSet.from_masks(masks)
mean = mean_map(stack)
var = variance_map(stack)
print(f"mean range  [{mean.values.min():+.3f}, {mean.values.max():+.3f}]")
print(f"var  range  [{var.values.min():.3f}, {var.values.max():.3f}]")

confident = apply_certainty_threshold(mean, 0.6)
kept = np.count_nonzero(confident.values)
print(f"tau 0.6 keeps {kept} of {h * w} pixels")

fused = binarize(soft_labels(stack))
metrics = score(fused, AnnotationMask(truth))
print(f"fused vs truth: accuracy {metrics.accuracy:.2f}%  macro_f {metrics.macro_f:.3f}")

out = Path(tempfile.mkdtemp(prefix="topoflood_overlay_"))
for name, map_, view in (("mean", confident, "aggregate"), ("variance", var, "variance")):
    rgba = render_overlay(map_, OverlaySpec(view=view, tau=0.6))
    path = out / f"{name}.png"
    Image.fromarray(rgba, "RGBA").save(path)
    print(f"wrote {path}")
