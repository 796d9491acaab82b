"""
Correlation ghost imaging baseline.

G(r1, r2) = < dI_r(r1) * dI_w(r2) >, with d the deviation from the per-pixel
ensemble mean. For a delta-correlated object-plane field G is proportional
to |T(f)|^2 at f = (r1 - r2)/(lam*d22), so sqrt(max(G, 0)) estimates |T|.
"""

from __future__ import annotations

import numpy as np

from errors import ShapeError, StatisticsError
from optics.objects import SpectrumEstimate, unit_peak
from scheme.acquisition import ShotRecord
from scheme.geometry import SchemeGeometry
from sensing.system import alignment_offsets, union_freq_axis


def _fluctuations(stack: np.ndarray) -> np.ndarray:
    delta = stack - stack.mean(axis=0)
    # pixels that never change carry no correlation
    delta[:, np.ptp(stack, axis=0) == 0] = 0.0
    return delta


def cgi_reconstruct(
    shots: list[ShotRecord],
    geometry: SchemeGeometry,
    r2_pixels: list[int] | None = None,
) -> SpectrumEstimate:
    if len(shots) < 2:
        raise StatisticsError(f"correlation needs at least 2 shots, got {len(shots)}")
    if r2_pixels is None:
        r2_pixels = [geometry.d2_grid.n_points // 2]
    r2_pixels = [int(px) for px in r2_pixels]

    n = geometry.d1_grid.n_points
    i_r = np.stack([s.i_r for s in shots])
    i_w = np.stack([s.i_w for s in shots])
    if i_r.shape[1] != n or i_w.shape[1] != geometry.d2_grid.n_points:
        raise ShapeError(
            f"shots carry {i_r.shape[1]}/{i_w.shape[1]} pixels, geometry expects "
            f"{n}/{geometry.d2_grid.n_points}"
        )

    offsets, size = alignment_offsets(geometry, r2_pixels)
    d_r = _fluctuations(i_r)
    d_w = _fluctuations(i_w[:, r2_pixels])
    g = d_r.T @ d_w / len(shots)

    total = np.zeros(size)
    count = np.zeros(size)
    for m, o in enumerate(offsets):
        total[o:o + n] += g[:, m]
        count[o:o + n] += 1
    averaged = np.divide(total, count, out=np.zeros(size), where=count > 0)

    return SpectrumEstimate(
        freq_axis=union_freq_axis(geometry, r2_pixels),
        magnitude=unit_peak(np.sqrt(np.maximum(averaged, 0.0))),
        provenance="cgi",
        lambda_d22=geometry.lambda_d22,
        extras={"n_shots": len(shots), "r2_pixels": r2_pixels},
    )
