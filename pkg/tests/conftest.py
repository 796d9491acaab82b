"""
Shared fixtures: a small matched scheme (64-point source, 16-pixel object
and detectors) on which every identity holds exactly and solves take
milliseconds.
"""

import math

import pytest

from optics.objects import make_phase_slits
from scheme.acquisition import acquire
from scheme.geometry import SchemeGeometry

SMALL_SOURCE = 64
SMALL_N = 16


@pytest.fixture
def geometry():
    return SchemeGeometry.matched(
        source_points=SMALL_SOURCE,
        object_points=SMALL_N,
        detector_points=SMALL_N,
        seed=11,
    )


@pytest.fixture
def slits(geometry):
    # two slits of 3 samples with a 2-sample gap, centred on the object grid
    p = geometry.object_grid.pitch
    return make_phase_slits(2, 3 * p, 2 * p, math.pi, geometry.object_grid)


@pytest.fixture
def shots(geometry, slits):
    return acquire(geometry, slits, 40, record_field=True)


@pytest.fixture
def small_config_data(tmp_path):
    """RunConfig dict for the small scheme, writing into tmp_path/run."""
    p = 632.8e-9 * 0.2 / 3e-3
    return {
        "name": "small",
        "geometry": {
            "d21": 0.2,
            "d22": 0.2,
            "source_points": SMALL_SOURCE,
            "object_points": SMALL_N,
            "detector_points": SMALL_N,
        },
        "object": {"n_slits": 2, "slit_width": 3 * p, "gap": 2 * p, "phase_depth": math.pi},
        "acquisition": {"n_shots": 30, "r2_pixels": [8], "seed": 5},
        "sensing": {"modes": ["homodyne", "diagonal"]},
        "solver": {"lambda_ratios": [0.01, 0.001], "max_iters": 300},
        "sweep": {"k_values": [10, 20], "modes": ["diagonal", "cgi"], "n_seeds": 2},
        "output_dir": str(tmp_path / "run"),
    }
