"""
Elevation-guided region growing
===============================

Flood a valley downstream from a seed, climb a ridge upstream, and fill
a polygon where every enclosed pixel seeds the growth.
"""

import numpy as np

from topoflood.raster import DemGrid, normalize
from topoflood.select import DOWNSTREAM, UPSTREAM, bfs_select, polygon_bfs_select

y, x = np.mgrid[0:40, 0:60].astype(np.float64)
z = 20.0 + 0.5 * x + 8.0 * np.sin(y / 6.0)
field = normalize(DemGrid(z, cell_size=10.0))


def show(name, flat):
    mask = np.zeros(field.f.shape, dtype=bool)
    mask.ravel()[flat] = True
    print(f"{name}: {flat.size} pixels, rows {np.flatnonzero(mask.any(1)).min()}"
          f"..{np.flatnonzero(mask.any(1)).max()}")


seed = (20, 30)
show("downstream tol 0.00", bfs_select(field, seed, DOWNSTREAM))
show("downstream tol 0.05", bfs_select(field, seed, DOWNSTREAM, tolerance=0.05))
show("upstream   tol 0.00", bfs_select(field, seed, UPSTREAM))

# 8-connectivity lets the growth cross diagonal saddle pixels
show("downstream 8-conn  ", bfs_select(field, seed, DOWNSTREAM, connectivity=8))

# a quad in continuous pixel coordinates; the fill is even-odd
quad = [[10.5, 5.5], [40.5, 8.5], [38.5, 30.5], [12.5, 28.5]]
show("polygon downstream ", polygon_bfs_select(field, quad, DOWNSTREAM, tolerance=0.02))
