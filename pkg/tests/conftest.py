import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from topoflood.raster import NormalizedField


def make_field(values) -> NormalizedField:
    """Wrap an array already scaled to [0, 1] without renormalizing it."""
    a = np.asarray(values, dtype=np.float64)
    return NormalizedField(
        f=a,
        source_range=(float(a.min()), float(a.max())),
        degenerate=bool(a.min() == a.max()),
    )


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
