"""Crowd annotation fusion: mean/variance maps, soft labels, metrics, overlays.

Two distinct unlabeled-pixel rules coexist deliberately: the mean/variance
views treat Unlabeled as signed 0 (it dilutes agreement), while soft labels
drop unlabeled votes from the denominator entirely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadParams, DimensionMismatch, NoOverlap, ViewMismatch
from .raster import DRY, FLOODED, UNLABELED, AnnotationMask

AGGREGATE_VIEW = "aggregate"
VARIANCE_VIEW = "variance"

# endpoint colors of the overlay blends (white toward these)
FLOOD_COLOR = (255, 0, 0)
DRY_COLOR = (0, 0, 255)
VARIANCE_HIGHLIGHT = (255, 128, 0)

_SIGN_LUT = np.array([0, -1, 1], dtype=np.int8)


@dataclass(frozen=True)
class AnnotationSet:
    """Stack of equally sized annotation masks, one per annotator."""

    stack: np.ndarray  # (n, h, w) uint8

    def __post_init__(self):
        s = self.stack
        if s.ndim != 3 or s.shape[0] < 1:
            raise DimensionMismatch(
                f"annotation stack must be (n>=1, h, w), got {s.shape}"
            )

    @classmethod
    def from_masks(cls, masks) -> "AnnotationSet":
        masks = list(masks)
        if not masks:
            raise DimensionMismatch("annotation set needs at least one mask")
        shape = masks[0].labels.shape
        for m in masks[1:]:
            if m.labels.shape != shape:
                raise DimensionMismatch(
                    f"mask shape {m.labels.shape} does not match {shape}"
                )
        return cls(np.stack([m.labels for m in masks]))

    @property
    def n(self) -> int:
        return int(self.stack.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return self.stack.shape[1:]


@dataclass(frozen=True)
class MeanMap:
    values: np.ndarray  # (h, w) float64 in [-1, 1]


@dataclass(frozen=True)
class VarianceMap:
    values: np.ndarray  # (h, w) float64 in [0, 1]


@dataclass(frozen=True)
class SoftLabelMap:
    """Per-pixel (flood_score, dry_score); NaN marks undefined pixels."""

    flood: np.ndarray
    dry: np.ndarray

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.flood)


@dataclass(frozen=True)
class OverlaySpec:
    view: str
    tau: float = 0.0

    def __post_init__(self):
        if self.view not in (AGGREGATE_VIEW, VARIANCE_VIEW):
            raise BadParams(
                f"view must be {AGGREGATE_VIEW!r} or {VARIANCE_VIEW!r}, "
                f"got {self.view!r}"
            )
        if not (0.0 <= self.tau <= 1.0):
            raise BadParams(f"tau must be in [0, 1], got {self.tau}")


@dataclass(frozen=True)
class QualityMetrics:
    """Confusion counts over jointly labeled pixels plus derived scores.

    TF/TD are true flooded/dry, FF/FD false flooded/dry (prediction's class
    names the row). Ratios with zero denominators are reported as 0.
    """

    TF: int
    TD: int
    FF: int
    FD: int

    @property
    def total(self) -> int:
        return self.TF + self.TD + self.FF + self.FD

    @property
    def accuracy(self) -> float:
        return 100.0 * (self.TF + self.TD) / self.total

    @property
    def flooded_precision(self) -> float:
        return _ratio(self.TF, self.TF + self.FF)

    @property
    def flooded_recall(self) -> float:
        return _ratio(self.TF, self.TF + self.FD)

    @property
    def flooded_f(self) -> float:
        return _f_score(self.flooded_precision, self.flooded_recall)

    @property
    def dry_precision(self) -> float:
        return _ratio(self.TD, self.TD + self.FD)

    @property
    def dry_recall(self) -> float:
        return _ratio(self.TD, self.TD + self.FF)

    @property
    def dry_f(self) -> float:
        return _f_score(self.dry_precision, self.dry_recall)

    @property
    def macro_f(self) -> float:
        return 0.5 * (self.flooded_f + self.dry_f)

    def record(self) -> dict:
        return {
            "TF": self.TF,
            "TD": self.TD,
            "FF": self.FF,
            "FD": self.FD,
            "accuracy": self.accuracy,
            "flooded": {
                "precision": self.flooded_precision,
                "recall": self.flooded_recall,
                "f": self.flooded_f,
            },
            "dry": {
                "precision": self.dry_precision,
                "recall": self.dry_recall,
                "f": self.dry_f,
            },
            "macro_f": self.macro_f,
        }

    def text_report(self) -> str:
        return "\n".join(
            [
                f"pixels_scored {self.total}",
                f"TF {self.TF}",
                f"TD {self.TD}",
                f"FF {self.FF}",
                f"FD {self.FD}",
                f"accuracy_percent {self.accuracy:.4f}",
                f"flooded_precision {self.flooded_precision:.6f}",
                f"flooded_recall {self.flooded_recall:.6f}",
                f"flooded_f {self.flooded_f:.6f}",
                f"dry_precision {self.dry_precision:.6f}",
                f"dry_recall {self.dry_recall:.6f}",
                f"dry_f {self.dry_f:.6f}",
                f"macro_f {self.macro_f:.6f}",
            ]
        )


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def _f_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if (p + r) else 0.0


def signed_view(mask: AnnotationMask) -> np.ndarray:
    """Flooded -> -1, Unlabeled -> 0, Dry -> +1, as an int8 array."""
    return _SIGN_LUT[mask.labels]


def _signed_stack(annotations: AnnotationSet) -> np.ndarray:
    return _SIGN_LUT[annotations.stack]


def mean_map(annotations: AnnotationSet) -> MeanMap:
    """Arithmetic mean of signed views; unlabeled votes count as 0."""
    return MeanMap(_signed_stack(annotations).mean(axis=0, dtype=np.float64))


def variance_map(annotations: AnnotationSet) -> VarianceMap:
    """Population variance of signed views (n in the denominator)."""
    signed = _signed_stack(annotations).astype(np.float64)
    mean = signed.mean(axis=0)
    return VarianceMap(((signed - mean) ** 2).mean(axis=0))


def apply_certainty_threshold(mean: MeanMap, tau: float) -> MeanMap:
    """Collapse to 0 every value whose magnitude is not greater than tau."""
    if not (0.0 <= tau <= 1.0):
        raise BadParams(f"tau must be in [0, 1], got {tau}")
    v = mean.values
    return MeanMap(np.where(np.abs(v) <= tau, 0.0, v))


def soft_labels(annotations: AnnotationSet) -> SoftLabelMap:
    """flood_score = #Flooded / (#Flooded + #Dry); unlabeled votes ignored.

    Pixels never labeled Flooded or Dry by anyone are undefined (NaN).
    """
    stack = annotations.stack
    flooded = (stack == FLOODED).sum(axis=0, dtype=np.float64)
    dry = (stack == DRY).sum(axis=0, dtype=np.float64)
    denom = flooded + dry
    with np.errstate(invalid="ignore", divide="ignore"):
        flood_score = np.where(denom > 0, flooded / denom, np.nan)
        dry_score = np.where(denom > 0, dry / denom, np.nan)
    return SoftLabelMap(flood=flood_score, dry=dry_score)


def apply_correction(soft: SoftLabelMap, correction: AnnotationMask) -> SoftLabelMap:
    """Overwrite scores where the reviewer labeled; unlabeled pixels keep crowd scores."""
    if correction.labels.shape != soft.flood.shape:
        raise DimensionMismatch(
            f"correction shape {correction.labels.shape} does not match "
            f"soft labels {soft.flood.shape}"
        )
    labels = correction.labels
    flood = soft.flood.copy()
    dry = soft.dry.copy()
    flood[labels == FLOODED] = 1.0
    dry[labels == FLOODED] = 0.0
    flood[labels == DRY] = 0.0
    dry[labels == DRY] = 1.0
    return SoftLabelMap(flood=flood, dry=dry)


def binarize(soft: SoftLabelMap) -> AnnotationMask:
    """Higher score wins; ties and undefined pixels stay Unlabeled."""
    out = np.full(soft.flood.shape, UNLABELED, dtype=np.uint8)
    defined = soft.defined
    out[defined & (soft.flood > soft.dry)] = FLOODED
    out[defined & (soft.dry > soft.flood)] = DRY
    return AnnotationMask(out)


def score(pred: AnnotationMask, reference: AnnotationMask) -> QualityMetrics:
    """Confusion metrics over pixels labeled in both masks."""
    if pred.labels.shape != reference.labels.shape:
        raise DimensionMismatch(
            f"prediction shape {pred.labels.shape} does not match "
            f"reference {reference.labels.shape}"
        )
    p = pred.labels
    r = reference.labels
    both = (p != UNLABELED) & (r != UNLABELED)
    if not both.any():
        raise NoOverlap("no pixel is labeled in both prediction and reference")
    tf = int(np.count_nonzero(both & (p == FLOODED) & (r == FLOODED)))
    td = int(np.count_nonzero(both & (p == DRY) & (r == DRY)))
    ff = int(np.count_nonzero(both & (p == FLOODED) & (r == DRY)))
    fd = int(np.count_nonzero(both & (p == DRY) & (r == FLOODED)))
    return QualityMetrics(TF=tf, TD=td, FF=ff, FD=fd)


def _quantize(x: np.ndarray) -> np.ndarray:
    return np.floor(x * 255.0 + 0.5).astype(np.uint8)


def _blend_channel(t: np.ndarray, target: int) -> np.ndarray:
    return np.floor((1.0 - t) * 255.0 + t * target + 0.5).astype(np.uint8)


def render_overlay(map_, spec: OverlaySpec) -> np.ndarray:
    """RGBA uint8 overlay of a mean or variance map.

    Aggregate view: white blends toward pure red (negative mean, flooded) or
    blue (positive, dry) with both blend factor and alpha equal to |v|, so
    confident pixels are saturated and opaque. Variance view: white blends
    toward the highlight color with normalized variance; alpha saturates to
    opaque at tau so high-disagreement areas stand out.
    """
    if spec.view == AGGREGATE_VIEW:
        if not isinstance(map_, MeanMap):
            raise ViewMismatch(
                f"aggregate view needs a MeanMap, got {type(map_).__name__}"
            )
        v = apply_certainty_threshold(map_, spec.tau).values
        t = np.abs(v)
        h, w = v.shape
        out = np.empty((h, w, 4), dtype=np.uint8)
        for ch in range(3):
            target = np.where(v < 0, FLOOD_COLOR[ch], DRY_COLOR[ch])
            out[:, :, ch] = np.floor(
                (1.0 - t) * 255.0 + t * target + 0.5
            ).astype(np.uint8)
        out[:, :, 3] = _quantize(t)
        return out
    if not isinstance(map_, VarianceMap):
        raise ViewMismatch(
            f"variance view needs a VarianceMap, got {type(map_).__name__}"
        )
    var = map_.values
    h, w = var.shape
    out = np.empty((h, w, 4), dtype=np.uint8)
    max_var = float(var.max()) if var.size else 0.0
    if max_var == 0.0:
        nv = np.zeros_like(var)
    else:
        nv = var / max_var
    for ch in range(3):
        out[:, :, ch] = _blend_channel(nv, VARIANCE_HIGHLIGHT[ch])
    if spec.tau > 0:
        alpha = np.minimum(nv / spec.tau, 1.0)
    else:
        alpha = (nv > 0).astype(np.float64)
    out[:, :, 3] = _quantize(alpha)
    return out
