"""Content-addressed on-disk dataset store and the pipeline around it.

Layout, one directory per dataset id under ``root/datasets``:

    dem.raw + dem.json     canonical float32 DEM + sidecar
    imagery.png            RGB texture (synthesized shading when not supplied)
    mesh.stl / mesh.obj    view mesh exports
    levels/NNN.seg + .json per-level segment ids (u32 LE) + manifest
    borders/NNN.png        cached border rasters
    cache/tree.npz         base contour tree + persistence pairs
    bundle.json            summary metadata
    submissions/<sid>/     mask.png + log.json + meta.json
    corrections/current.png

Dataset ids are truncated SHA-256 over the exact input bytes and parameters,
which makes preprocessing idempotent; submission ids hash mask + log the same
way.
"""

from __future__ import annotations

import errno
import hashlib
import io
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ..aggregate import (
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
    soft_labels,
    variance_map,
)
from ..errors import (
    BadParams,
    BadThresholds,
    DimensionMismatch,
    NoSubmissions,
    ReplayMismatch,
    StorageFull,
    UnknownDataset,
)
from ..mesh import TerrainMesh, export_mesh, triangulate_greedy
from ..raster import (
    AnnotationMask,
    DemGrid,
    RgbRaster,
    load_dem,
    load_imagery,
    load_mask,
    normalize,
    save_dem_raw,
    save_imagery,
    save_mask,
)
from ..session import SessionContext, SessionLog, replay
from ..topology import (
    DEFAULT_THRESHOLDS,
    ContourTree,
    FieldOrder,
    MultiScaleSegmentation,
    PersistencePair,
    SegmentationMap,
    build_multiscale,
    check_thresholds,
    export_segment_ids,
    parse_segmentation,
    segment_borders,
    segment_field,
    segmentation_manifest,
    simplify_tree,
)
from ..topology.trees import ESSENTIAL, MIN_SADDLE, SADDLE_MAX

_SIDE_CODES = {MIN_SADDLE: 0, SADDLE_MAX: 1, ESSENTIAL: 2}
_SIDE_NAMES = {v: k for k, v in _SIDE_CODES.items()}


@dataclass(frozen=True)
class SubmissionRecord:
    id: str
    dataset_id: str
    mask: AnnotationMask
    log: SessionLog
    submitted_at: str


@dataclass(frozen=True)
class AggregateResult:
    mean: MeanMap
    variance: VarianceMap
    soft: SoftLabelMap
    binarized: AnnotationMask


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _digest(*parts: bytes) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(len(p).to_bytes(8, "little"))
        h.update(p)
    return h.hexdigest()[:16]


def _shade_imagery(grid: DemGrid) -> RgbRaster:
    """Grayscale hillshade used when no aerial imagery is uploaded."""
    v = grid.values
    gy, gx = np.gradient(v, grid.cell_size)
    slope = np.hypot(gx, gy)
    shade = 1.0 / (1.0 + slope)
    lo, hi = shade.min(), shade.max()
    norm = (shade - lo) / (hi - lo) if hi > lo else np.full_like(shade, 0.5)
    gray = np.floor(60 + norm * 160 + 0.5).astype(np.uint8)
    return RgbRaster(np.repeat(gray[:, :, None], 3, axis=2))


class Store:
    """Filesystem-backed dataset registry; one instance per root directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._contexts: dict[str, SessionContext] = {}
        try:
            (self.root / "datasets").mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            if exc.errno == errno.ENOSPC:
                raise StorageFull(str(exc)) from exc
            raise

    # -- helpers -----------------------------------------------------------

    def _dir(self, dataset_id: str) -> Path:
        return self.root / "datasets" / dataset_id

    def _require(self, dataset_id: str) -> Path:
        d = self._dir(dataset_id)
        if not (d / "bundle.json").is_file():
            raise UnknownDataset(f"no dataset {dataset_id!r} in store")
        return d

    @staticmethod
    def _write(path: Path, data: bytes) -> None:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(path.suffix + ".tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
        except OSError as exc:
            if exc.errno == errno.ENOSPC:
                raise StorageFull(str(exc)) from exc
            raise

    def list_datasets(self) -> list[str]:
        base = self.root / "datasets"
        return sorted(
            p.name for p in base.iterdir() if (p / "bundle.json").is_file()
        )

    def bundle(self, dataset_id: str) -> dict:
        d = self._require(dataset_id)
        return json.loads((d / "bundle.json").read_text())

    # -- preprocessing -----------------------------------------------------

    def preprocess_dataset(
        self,
        dem_data: bytes,
        dem_format: str = "ascii",
        sidecar: str | None = None,
        imagery_data: bytes | None = None,
        thresholds=DEFAULT_THRESHOLDS,
        mesh_max_error: float = 0.5,
        mesh_max_vertices: int | None = None,
        fill_nodata: bool = False,
    ) -> str:
        """Run the full pipeline and persist every served artifact.

        Returns the dataset id. Re-running with identical inputs returns the
        existing id without recomputing anything.
        """
        ladder = check_thresholds(thresholds)
        params = json.dumps(
            {
                "format": dem_format,
                "thresholds": list(ladder),
                "mesh_max_error": mesh_max_error,
                "mesh_max_vertices": mesh_max_vertices,
                "fill_nodata": fill_nodata,
            },
            sort_keys=True,
        ).encode()
        dataset_id = _digest(dem_data, imagery_data or b"", params)
        d = self._dir(dataset_id)
        if (d / "bundle.json").is_file():
            return dataset_id

        grid = load_dem(dem_data, dem_format, header=sidecar, fill_nodata=fill_nodata)
        h, w = grid.values.shape
        if imagery_data is not None:
            imagery = load_imagery(imagery_data)
            if imagery.pixels.shape[:2] != (h, w):
                raise DimensionMismatch(
                    f"imagery is {imagery.pixels.shape[:2]}, DEM is {(h, w)}"
                )
            imagery_png = imagery_data
        else:
            imagery_png = save_imagery(_shade_imagery(grid))

        field = normalize(grid)
        multiscale = build_multiscale(field, ladder)
        mesh = triangulate_greedy(grid, mesh_max_error, mesh_max_vertices)

        payload, sidecar_out = save_dem_raw(grid)
        self._write(d / "dem.raw", payload)
        self._write(d / "dem.json", sidecar_out.encode())
        self._write(d / "imagery.png", imagery_png)
        self._write(d / "mesh.stl", export_mesh(mesh, "stl"))
        self._write(d / "mesh.obj", export_mesh(mesh, "obj"))
        for i, seg in enumerate(multiscale.levels):
            self._write_level(d, i, seg)
        if multiscale.trees:
            self._write_tree_cache(d, multiscale.trees[0], multiscale.pairs)
        bundle = {
            "id": dataset_id,
            "width": w,
            "height": h,
            "cell_size": grid.cell_size,
            "thresholds": list(ladder),
            "mesh_max_error": mesh_max_error,
            "mesh_max_vertices": mesh_max_vertices,
            "degenerate": field.degenerate,
            "source_range": list(field.source_range),
            "segment_counts": [m.segment_count for m in multiscale.levels],
            "mesh_vertices": mesh.vertex_count,
            "mesh_triangles": mesh.triangle_count,
            "created_at": _now(),
        }
        self._write(d / "bundle.json", json.dumps(bundle, indent=1).encode())
        return dataset_id

    def _write_level(self, d: Path, index: int, seg: SegmentationMap) -> None:
        self._write(d / "levels" / f"{index:03d}.seg", export_segment_ids(seg))
        self._write(
            d / "levels" / f"{index:03d}.json",
            json.dumps(segmentation_manifest(seg)).encode(),
        )

    def _write_tree_cache(self, d: Path, tree: ContourTree, pairs) -> None:
        buf = {}
        buf["arcs"] = tree.arcs
        buf["arc_of"] = tree.arc_of
        buf["node_vertices"] = tree.node_vertices
        buf["pair_birth"] = np.array([p.birth_vertex for p in pairs], dtype=np.int64)
        buf["pair_death"] = np.array([p.death_vertex for p in pairs], dtype=np.int64)
        buf["pair_pers"] = np.array([p.persistence for p in pairs], dtype=np.float64)
        buf["pair_side"] = np.array(
            [_SIDE_CODES[p.side] for p in pairs], dtype=np.int8
        )
        bio = io.BytesIO()
        np.savez_compressed(bio, **buf)
        self._write(d / "cache" / "tree.npz", bio.getvalue())

    # -- loading -----------------------------------------------------------

    def load_grid(self, dataset_id: str) -> DemGrid:
        d = self._require(dataset_id)
        return load_dem(
            (d / "dem.raw").read_bytes(), "raw", header=(d / "dem.json").read_text()
        )

    def load_level(self, dataset_id: str, level: int) -> SegmentationMap:
        d = self._require(dataset_id)
        seg_path = d / "levels" / f"{level:03d}.seg"
        man_path = d / "levels" / f"{level:03d}.json"
        if not seg_path.is_file():
            raise UnknownDataset(
                f"dataset {dataset_id} has no segmentation level {level}"
            )
        return parse_segmentation(seg_path.read_bytes(), man_path.read_text())

    def context(self, dataset_id: str) -> SessionContext:
        """Session context (field + level maps) rebuilt from stored artifacts."""
        ctx = self._contexts.get(dataset_id)
        if ctx is not None:
            return ctx
        d = self._require(dataset_id)
        bundle = self.bundle(dataset_id)
        field = normalize(self.load_grid(dataset_id))
        levels = [
            self.load_level(dataset_id, i)
            for i in range(len(bundle["thresholds"]))
        ]
        multiscale = MultiScaleSegmentation(
            field=field, levels=levels, trees=[], pairs=[]
        )
        ctx = SessionContext(
            dataset_id=dataset_id, field=field, multiscale=multiscale
        )
        self._contexts[dataset_id] = ctx
        return ctx

    def add_level(self, dataset_id: str, epsilon: float) -> int:
        """Simplify the cached base tree at a new, coarser epsilon.

        Appends the level to the persisted ladder and returns its index.
        A level at an already-present epsilon returns the existing index.
        """
        d = self._require(dataset_id)
        bundle = self.bundle(dataset_id)
        ladder = bundle["thresholds"]
        if epsilon in ladder:
            return ladder.index(epsilon)
        if epsilon <= ladder[-1]:
            raise BadThresholds(
                f"new level {epsilon} must exceed current maximum {ladder[-1]}"
            )
        index = len(ladder)
        if bundle["degenerate"]:
            ids = np.zeros((bundle["height"], bundle["width"]), dtype=np.int32)
            seg = SegmentationMap(epsilon=float(epsilon), segment_ids=ids, segment_count=1)
        else:
            tree, pairs = self._load_tree_cache(d, dataset_id)
            seg = segment_field(simplify_tree(tree, pairs, float(epsilon)))
        self._write_level(d, index, seg)
        bundle["thresholds"] = ladder + [float(epsilon)]
        bundle["segment_counts"] = bundle["segment_counts"] + [seg.segment_count]
        self._write(d / "bundle.json", json.dumps(bundle, indent=1).encode())
        self._contexts.pop(dataset_id, None)
        return index

    def _load_tree_cache(self, d: Path, dataset_id: str):
        with np.load(d / "cache" / "tree.npz") as z:
            arcs = z["arcs"]
            arc_of = z["arc_of"]
            node_vertices = z["node_vertices"]
            pairs = [
                PersistencePair(
                    int(b), int(dd), float(p), _SIDE_NAMES[int(s)]
                )
                for b, dd, p, s in zip(
                    z["pair_birth"], z["pair_death"], z["pair_pers"], z["pair_side"]
                )
            ]
        field = normalize(self.load_grid(dataset_id))
        order = FieldOrder(field.f)
        tree = ContourTree(
            order=order,
            node_vertices=node_vertices,
            arcs=arcs,
            arc_of=arc_of,
            epsilon=0.0,
        )
        return tree, pairs

    def mesh_bytes(self, dataset_id: str, format: str) -> bytes:
        d = self._require(dataset_id)
        if format not in ("stl", "obj"):
            raise BadParams(f"unknown mesh format {format!r}")
        return (d / f"mesh.{format}").read_bytes()

    def imagery_bytes(self, dataset_id: str) -> bytes:
        return (self._require(dataset_id) / "imagery.png").read_bytes()

    def segmentation_bytes(self, dataset_id: str, level: int) -> tuple[bytes, dict]:
        seg = self.load_level(dataset_id, level)
        return export_segment_ids(seg), segmentation_manifest(seg)

    def borders_png(self, dataset_id: str, level: int) -> bytes:
        d = self._require(dataset_id)
        cached = d / "borders" / f"{level:03d}.png"
        if cached.is_file():
            return cached.read_bytes()
        seg = self.load_level(dataset_id, level)
        border = segment_borders(seg)
        img = np.where(border, 255, 0).astype(np.uint8)
        from PIL import Image

        bio = io.BytesIO()
        Image.fromarray(img, mode="L").save(bio, format="PNG")
        data = bio.getvalue()
        self._write(cached, data)
        return data

    # -- submissions -------------------------------------------------------

    def submit_annotation(
        self,
        dataset_id: str,
        mask_data: bytes,
        log_data: bytes,
        verify: bool = True,
    ) -> SubmissionRecord:
        """Persist one annotator's mask + log after replay verification.

        With ``verify`` off (bulk imports of legacy data) the check downgrades
        to a warning in the submission metadata.
        """
        ctx = self.context(dataset_id)
        mask = load_mask(mask_data)
        h, w = ctx.shape
        if mask.labels.shape != (h, w):
            raise DimensionMismatch(
                f"mask is {mask.labels.shape}, dataset is {(h, w)}"
            )
        log = SessionLog.from_json_bytes(log_data)
        warning = None
        replayed = replay(log, ctx)
        if replayed != mask:
            if verify:
                raise ReplayMismatch(
                    "submitted mask does not match replaying its log"
                )
            warning = "mask does not match replay of its log"
        sid = _digest(mask_data, log_data)
        d = self._require(dataset_id) / "submissions" / sid
        self._write(d / "mask.png", mask_data)
        self._write(d / "log.json", log_data)
        meta = {"id": sid, "submitted_at": _now(), "warning": warning}
        self._write(d / "meta.json", json.dumps(meta).encode())
        return SubmissionRecord(
            id=sid,
            dataset_id=dataset_id,
            mask=mask,
            log=log,
            submitted_at=meta["submitted_at"],
        )

    def list_submissions(self, dataset_id: str) -> list[str]:
        d = self._require(dataset_id) / "submissions"
        if not d.is_dir():
            return []
        return sorted(p.name for p in d.iterdir() if (p / "mask.png").is_file())

    def submission_mask(self, dataset_id: str, submission_id: str) -> AnnotationMask:
        d = self._require(dataset_id) / "submissions" / submission_id
        if not (d / "mask.png").is_file():
            raise UnknownDataset(
                f"no submission {submission_id!r} in dataset {dataset_id}"
            )
        return load_mask((d / "mask.png").read_bytes())

    # -- corrections and aggregation --------------------------------------

    def store_correction(self, dataset_id: str, mask_data: bytes) -> None:
        ctx = self.context(dataset_id)
        mask = load_mask(mask_data)
        if mask.labels.shape != ctx.shape:
            raise DimensionMismatch(
                f"correction is {mask.labels.shape}, dataset is {ctx.shape}"
            )
        self._write(self._require(dataset_id) / "corrections" / "current.png", mask_data)

    def load_correction(self, dataset_id: str) -> AnnotationMask | None:
        p = self._require(dataset_id) / "corrections" / "current.png"
        if not p.is_file():
            return None
        return load_mask(p.read_bytes())

    def aggregate_dataset(
        self,
        dataset_id: str,
        correction: AnnotationMask | None = None,
        tau: float = 0.0,
    ) -> AggregateResult:
        """Mean/variance/soft-label/binarized fusion of all submissions.

        ``correction`` defaults to the stored reviewer correction when one
        exists; ``tau`` thresholds only the returned mean map.
        """
        sids = self.list_submissions(dataset_id)
        if not sids:
            raise NoSubmissions(f"dataset {dataset_id} has no submissions")
        masks = [self.submission_mask(dataset_id, s) for s in sids]
        annotations = AnnotationSet.from_masks(masks)
        mean = apply_certainty_threshold(mean_map(annotations), tau)
        var = variance_map(annotations)
        soft = soft_labels(annotations)
        corr = correction if correction is not None else self.load_correction(dataset_id)
        if corr is not None:
            soft = apply_correction(soft, corr)
        return AggregateResult(
            mean=mean, variance=var, soft=soft, binarized=binarize(soft)
        )

    def overlay_png(self, dataset_id: str, view: str, tau: float) -> bytes:
        spec = OverlaySpec(view=view, tau=tau)
        result = self.aggregate_dataset(dataset_id, tau=tau)
        if view == "aggregate":
            rgba = render_overlay(result.mean, spec)
        else:
            rgba = render_overlay(result.variance, spec)
        from PIL import Image

        bio = io.BytesIO()
        Image.fromarray(rgba, mode="RGBA").save(bio, format="PNG")
        return bio.getvalue()

    def metrics(self, dataset_id: str, reference_submission: str) -> QualityMetrics:
        """Score the corrected, binarized aggregate against one submission."""
        reference = self.submission_mask(dataset_id, reference_submission)
        result = self.aggregate_dataset(dataset_id)
        return score(result.binarized, reference)
