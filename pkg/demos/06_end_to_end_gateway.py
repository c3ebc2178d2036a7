"""
End to end: preprocess, annotate, submit, review
================================================

The full loop a deployment runs: a DEM goes into the store, two
annotators label it through replayable session logs, the gateway
verifies and fuses their work, and the HTTP API serves the results.
"""

import tempfile

import numpy as np
from fastapi.testclient import TestClient

from topoflood.gateway.service import create_app
from topoflood.gateway.store import Store
from topoflood.raster import DemGrid, save_dem_raw, save_mask
from topoflood.session import (
    ActionRecord,
    apply_action,
    new_log,
    new_session,
)

rng = np.random.default_rng(3)
y, x = np.mgrid[0:80, 0:120].astype(np.float64)
z = 15.0 * np.sin(x / 17.0) + 9.0 * np.cos(y / 11.0) + rng.normal(0, 0.5, (80, 120))

store = Store(tempfile.mkdtemp(prefix="topoflood_store_"))
data, sidecar = save_dem_raw(DemGrid(z, cell_size=10.0))
dataset = store.preprocess_dataset(data, dem_format="raw", sidecar=sidecar,
                                   thresholds=(0.0, 0.02, 0.08), mesh_max_error=0.8)
print(f"dataset {dataset}")
print(f"segments per level: {store.bundle(dataset)['segment_counts']}")


def annotate(moves):
    ctx = store.context(dataset)
    state = new_session(ctx)
    log = new_log(ctx)
    for seq, (kind, params) in enumerate(moves, start=1):
        state = apply_action(state, ActionRecord(seq=seq, t_ms=seq * 250, kind=kind,
                                                 params=params), ctx)
        log.append(ActionRecord(seq=seq, t_ms=seq * 250, kind=kind, params=params))
    return save_mask(state.mask), log.to_json_bytes()


low = np.unravel_index(int(np.argmin(z)), z.shape)
# annotator B seeds at the waterline and lets strict descent fill the basin
norm = (z - z.min()) / (z.max() - z.min())
rim = np.unravel_index(int(np.argmin(np.abs(norm - 0.25))), z.shape)
a_mask, a_log = annotate([
    ("set_level", {"level": 2}),
    ("segment_pick", {"pixel": [int(low[0]), int(low[1])], "level": 2}),
    ("brush", {"center": [10, 10], "side": 5}),
])
b_mask, b_log = annotate([
    ("point_bfs", {"seed": [int(rim[0]), int(rim[1])], "tolerance": 0.0}),
])

sub_a = store.submit_annotation(dataset, a_mask, a_log)
sub_b = store.submit_annotation(dataset, b_mask, b_log)
print(f"submissions verified: {sub_a.id}, {sub_b.id}")

result = store.aggregate_dataset(dataset, tau=0.0)
agree = np.count_nonzero(result.mean.values == -1.0)
print(f"both annotators flood {agree} pixels")
print(f"annotator B scored against A: "
      f"{store.metrics(dataset, sub_a.id).accuracy:.2f}% agreement")

# the same store, served over HTTP
client = TestClient(create_app(store))
listing = client.get("/datasets").json()
print(f"\nHTTP lists {len(listing['datasets'])} dataset(s)")
png = client.get(f"/datasets/{dataset}/overlay", params={"view": "aggregate", "tau": 0.6})
print(f"overlay png: {len(png.content)} bytes, {png.headers['content-type']}")
mesh = client.get(f"/datasets/{dataset}/mesh")
print(f"terrain stl: {len(mesh.content)} bytes")
