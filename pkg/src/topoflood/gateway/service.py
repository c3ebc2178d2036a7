"""HTTP gateway over the dataset store.

Binary payload layouts (all row-major, little-endian):
  - segmentation: width*height uint32 segment ids; JSON manifest via
    ``?manifest=true``
  - field: width*height float64 normalized elevations
  - aggregate mean/variance: width*height float64
  - soft labels: two width*height float64 planes, flood scores then dry
    scores, NaN where undefined
Dimensions travel in the dataset bundle (``GET /datasets/{id}``) and in
``X-Width``/``X-Height`` response headers.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from fastapi import Body, FastAPI, File, Form, UploadFile
from fastapi.responses import JSONResponse, Response

from ..errors import (
    BadParams,
    NoSubmissions,
    ReplayMismatch,
    StorageFull,
    TopofloodError,
    UnknownDataset,
)
from ..topology import DEFAULT_THRESHOLDS
from .store import Store

_STATUS = (
    (UnknownDataset, 404),
    (ReplayMismatch, 409),
    (NoSubmissions, 409),
    (StorageFull, 507),
)

_OCTET = "application/octet-stream"


def _parse_thresholds(text: str | None):
    if text is None:
        return DEFAULT_THRESHOLDS
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError as exc:
        raise BadParams(f"thresholds must be comma-separated numbers: {exc}") from exc


def _plane_response(arr: np.ndarray) -> Response:
    h, w = arr.shape[-2:]
    return Response(
        content=np.ascontiguousarray(arr, dtype="<f8").tobytes(),
        media_type=_OCTET,
        headers={"X-Width": str(w), "X-Height": str(h)},
    )


def create_app(store: Store | str | Path) -> FastAPI:
    if not isinstance(store, Store):
        store = Store(store)
    app = FastAPI(title="topoflood gateway")
    app.state.store = store

    @app.exception_handler(TopofloodError)
    async def _module_error(request, exc: TopofloodError):
        status = 400
        for cls, code in _STATUS:
            if isinstance(exc, cls):
                status = code
                break
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/datasets")
    def list_datasets():
        return {"datasets": store.list_datasets()}

    @app.post("/datasets")
    async def create_dataset(
        dem: UploadFile = File(...),
        imagery: UploadFile | None = File(None),
        dem_format: str = Form("ascii"),
        sidecar: str | None = Form(None),
        thresholds: str | None = Form(None),
        mesh_max_error: float = Form(0.5),
        mesh_max_vertices: int | None = Form(None),
        fill_nodata: bool = Form(False),
    ):
        dataset_id = store.preprocess_dataset(
            await dem.read(),
            dem_format=dem_format,
            sidecar=sidecar,
            imagery_data=(await imagery.read()) if imagery is not None else None,
            thresholds=_parse_thresholds(thresholds),
            mesh_max_error=mesh_max_error,
            mesh_max_vertices=mesh_max_vertices,
            fill_nodata=fill_nodata,
        )
        return {"id": dataset_id}

    @app.get("/datasets/{dataset_id}")
    def get_bundle(dataset_id: str):
        return store.bundle(dataset_id)

    @app.get("/datasets/{dataset_id}/mesh")
    def get_mesh(dataset_id: str, format: str = "stl"):
        data = store.mesh_bytes(dataset_id, format)
        media = "text/plain" if format == "obj" else "model/stl"
        return Response(content=data, media_type=media)

    @app.get("/datasets/{dataset_id}/imagery")
    def get_imagery(dataset_id: str):
        return Response(content=store.imagery_bytes(dataset_id), media_type="image/png")

    @app.get("/datasets/{dataset_id}/field")
    def get_field(dataset_id: str):
        # normalized elevations; clients run the selection tools on these
        # exact values so their results replay bit-identically
        return _plane_response(store.context(dataset_id).field.f)

    @app.get("/datasets/{dataset_id}/segmentation/{level}")
    def get_segmentation(dataset_id: str, level: int, manifest: bool = False):
        payload, man = store.segmentation_bytes(dataset_id, level)
        if manifest:
            return man
        return Response(
            content=payload,
            media_type=_OCTET,
            headers={
                "X-Width": str(man["width"]),
                "X-Height": str(man["height"]),
                "X-Segment-Count": str(man["segment_count"]),
            },
        )

    @app.get("/datasets/{dataset_id}/borders/{level}")
    def get_borders(dataset_id: str, level: int):
        return Response(
            content=store.borders_png(dataset_id, level), media_type="image/png"
        )

    @app.post("/datasets/{dataset_id}/levels")
    def add_level(dataset_id: str, payload: dict = Body(...)):
        epsilon = payload.get("epsilon")
        if isinstance(epsilon, bool) or not isinstance(epsilon, (int, float)):
            raise BadParams(f"epsilon must be a number, got {epsilon!r}")
        index = store.add_level(dataset_id, float(epsilon))
        return {"level": index, "thresholds": store.bundle(dataset_id)["thresholds"]}

    @app.post("/datasets/{dataset_id}/annotations")
    async def post_annotation(
        dataset_id: str,
        mask: UploadFile = File(...),
        log: UploadFile = File(...),
        verify: bool = Form(True),
    ):
        record = store.submit_annotation(
            dataset_id, await mask.read(), await log.read(), verify=verify
        )
        return {"submission_id": record.id}

    @app.get("/datasets/{dataset_id}/submissions")
    def list_submissions(dataset_id: str):
        return {"submissions": store.list_submissions(dataset_id)}

    @app.get("/datasets/{dataset_id}/aggregate/mean")
    def get_mean(dataset_id: str, tau: float = 0.0):
        result = store.aggregate_dataset(dataset_id, tau=tau)
        return _plane_response(result.mean.values)

    @app.get("/datasets/{dataset_id}/aggregate/variance")
    def get_variance(dataset_id: str):
        result = store.aggregate_dataset(dataset_id)
        return _plane_response(result.variance.values)

    @app.get("/datasets/{dataset_id}/softlabels")
    def get_softlabels(dataset_id: str):
        result = store.aggregate_dataset(dataset_id)
        planes = np.stack([result.soft.flood, result.soft.dry])
        return _plane_response(planes)

    @app.post("/datasets/{dataset_id}/corrections")
    async def post_correction(dataset_id: str, mask: UploadFile = File(...)):
        store.store_correction(dataset_id, await mask.read())
        return {"status": "stored"}

    @app.get("/datasets/{dataset_id}/overlay")
    def get_overlay(dataset_id: str, view: str = "aggregate", tau: float = 0.0):
        return Response(
            content=store.overlay_png(dataset_id, view, tau), media_type="image/png"
        )

    @app.get("/datasets/{dataset_id}/metrics")
    def get_metrics(dataset_id: str, reference: str):
        return store.metrics(dataset_id, reference).record()

    return app
