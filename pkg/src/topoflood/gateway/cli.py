"""Command-line mirror of the gateway endpoints.

Every subcommand exits 0 on success; module errors print their class name to
stderr and exit 1.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from ..errors import TopofloodError
from ..raster import load_mask, save_mask
from ..session import SessionLog, replay
from ..topology import DEFAULT_THRESHOLDS
from .store import Store

DEFAULT_STORE = os.environ.get("TOPOFLOOD_STORE", "./topoflood-store")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topoflood",
        description="Preprocess, serve, and aggregate flood annotation datasets.",
    )
    parser.add_argument(
        "--store",
        default=DEFAULT_STORE,
        help=f"store directory (default {DEFAULT_STORE!r} or $TOPOFLOOD_STORE)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="build mesh + segmentations for a DEM")
    p.add_argument("--dem", required=True, help="DEM path (ESRI ASCII or raw f32)")
    p.add_argument("--dem-format", choices=["ascii", "raw"], default="ascii")
    p.add_argument("--sidecar", help="JSON sidecar path (required for raw format)")
    p.add_argument("--imagery", help="aligned RGB PNG; shaded relief if omitted")
    p.add_argument(
        "--thresholds",
        help="comma-separated simplification ladder "
        f"(default {','.join(str(t) for t in DEFAULT_THRESHOLDS)})",
    )
    p.add_argument("--mesh-max-error", type=float, default=0.5)
    p.add_argument("--mesh-max-vertices", type=int)
    p.add_argument("--fill-nodata", action="store_true")

    p = sub.add_parser("serve", help="run the HTTP gateway")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    p = sub.add_parser("submit", help="store an annotation mask + session log")
    p.add_argument("--dataset", required=True)
    p.add_argument("--mask", required=True, help="annotation mask PNG")
    p.add_argument("--log", required=True, help="session log JSON")
    p.add_argument(
        "--no-verify",
        action="store_true",
        help="downgrade replay verification to a stored warning",
    )

    p = sub.add_parser("aggregate", help="fuse all submissions of a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--correction", help="reviewer correction mask PNG")
    p.add_argument("--out-dir", default=".")

    p = sub.add_parser("metrics", help="score the aggregate against a submission")
    p.add_argument("--dataset", required=True)
    p.add_argument("--reference", required=True, help="reference submission id")
    p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("replay", help="replay a session log into a mask")
    p.add_argument("--dataset", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True, help="output mask PNG path")

    p = sub.add_parser("export-overlay", help="render an aggregate or variance overlay")
    p.add_argument("--dataset", required=True)
    p.add_argument("--view", choices=["aggregate", "variance"], default="aggregate")
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--out", required=True, help="output RGBA PNG path")

    return parser


def _cmd_preprocess(store: Store, args) -> int:
    thresholds = DEFAULT_THRESHOLDS
    if args.thresholds:
        thresholds = tuple(float(t) for t in args.thresholds.split(","))
    sidecar = Path(args.sidecar).read_text() if args.sidecar else None
    imagery = Path(args.imagery).read_bytes() if args.imagery else None
    dataset_id = store.preprocess_dataset(
        Path(args.dem).read_bytes(),
        dem_format=args.dem_format,
        sidecar=sidecar,
        imagery_data=imagery,
        thresholds=thresholds,
        mesh_max_error=args.mesh_max_error,
        mesh_max_vertices=args.mesh_max_vertices,
        fill_nodata=args.fill_nodata,
    )
    bundle = store.bundle(dataset_id)
    print(dataset_id)
    print(
        f"{bundle['width']}x{bundle['height']} cells, "
        f"{len(bundle['thresholds'])} levels, "
        f"mesh {bundle['mesh_vertices']} vertices / "
        f"{bundle['mesh_triangles']} triangles"
    )
    return 0


def _cmd_serve(store: Store, args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(store), host=args.host, port=args.port)
    return 0


def _cmd_submit(store: Store, args) -> int:
    record = store.submit_annotation(
        args.dataset,
        Path(args.mask).read_bytes(),
        Path(args.log).read_bytes(),
        verify=not args.no_verify,
    )
    print(record.id)
    return 0


def _cmd_aggregate(store: Store, args) -> int:
    correction = None
    if args.correction:
        correction = load_mask(Path(args.correction).read_bytes())
    result = store.aggregate_dataset(args.dataset, correction=correction, tau=args.tau)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h, w = result.mean.values.shape
    (out / "mean.f64").write_bytes(result.mean.values.astype("<f8").tobytes())
    (out / "variance.f64").write_bytes(result.variance.values.astype("<f8").tobytes())
    planes = np.stack([result.soft.flood, result.soft.dry])
    (out / "softlabels.f64").write_bytes(planes.astype("<f8").tobytes())
    (out / "binarized.png").write_bytes(save_mask(result.binarized))
    meta = {
        "dataset": args.dataset,
        "width": w,
        "height": h,
        "tau": args.tau,
        "submissions": len(store.list_submissions(args.dataset)),
        "layout": "float64 little-endian row-major; softlabels = flood plane then dry plane",
    }
    (out / "aggregate.json").write_text(json.dumps(meta, indent=1))
    print(f"wrote mean/variance/softlabels/binarized for {w}x{h} to {out}")
    return 0


def _cmd_metrics(store: Store, args) -> int:
    metrics = store.metrics(args.dataset, args.reference)
    if args.json:
        print(json.dumps(metrics.record(), indent=1))
    else:
        print(metrics.text_report())
    return 0


def _cmd_replay(store: Store, args) -> int:
    ctx = store.context(args.dataset)
    log = SessionLog.from_json_bytes(Path(args.log).read_bytes())
    mask = replay(log, ctx)
    Path(args.out).write_bytes(save_mask(mask))
    labeled = int(np.count_nonzero(mask.labels))
    print(f"replayed {len(log.actions)} actions; {labeled} labeled pixels -> {args.out}")
    return 0


def _cmd_export_overlay(store: Store, args) -> int:
    Path(args.out).write_bytes(store.overlay_png(args.dataset, args.view, args.tau))
    print(f"wrote {args.view} overlay (tau={args.tau}) -> {args.out}")
    return 0


_COMMANDS = {
    "preprocess": _cmd_preprocess,
    "serve": _cmd_serve,
    "submit": _cmd_submit,
    "aggregate": _cmd_aggregate,
    "metrics": _cmd_metrics,
    "replay": _cmd_replay,
    "export-overlay": _cmd_export_overlay,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        store = Store(args.store)
        return _COMMANDS[args.command](store, args)
    except TopofloodError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
