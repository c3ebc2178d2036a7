"""
Greedy terrain meshing and export
=================================
"""

import tempfile
from pathlib import Path

import numpy as np

from topoflood.mesh import export_mesh, mesh_error, triangulate_greedy
from topoflood.raster import DemGrid

y, x = np.mgrid[0:128, 0:128].astype(np.float64)
z = 30.0 * np.exp(-((x - 40) ** 2 + (y - 56) ** 2) / 900.0)
z += 18.0 * np.exp(-((x - 92) ** 2 + (y - 70) ** 2) / 400.0)
z += 0.08 * x

grid = DemGrid(z, cell_size=30.0)

# tighter tolerance, more vertices; the error bound always holds
for tol in (4.0, 1.0, 0.25):
    mesh = triangulate_greedy(grid, max_error=tol, max_vertices=4096)
    err = mesh_error(mesh, grid)
    print(f"max_error {tol:5.2f}: {mesh.vertex_count:5d} vertices "
          f"{mesh.triangle_count:5d} triangles, achieved {err:.3f}")

out = Path(tempfile.mkdtemp(prefix="topoflood_mesh_"))
stl = out / "terrain.stl"
obj = out / "terrain.obj"
stl.write_bytes(export_mesh(mesh, "stl"))
obj.write_bytes(export_mesh(mesh, "obj"))
print(f"\nwrote {stl} ({stl.stat().st_size} bytes)")
print(f"wrote {obj} ({obj.stat().st_size} bytes)")
print("obj head:", obj.read_text().splitlines()[0])
