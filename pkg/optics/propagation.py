"""
Direct-summation Fresnel propagation between 1-D grids.

Kernel convention (used consistently by every module):

    E_out(u) = 1/sqrt(-i*lam*d) * sum_x E_in(x) * exp(-i*pi*(u - x)**2 / (lam*d)) * dx

with the principal square root; a negative distance gives the exact inverse
kernel on matched grids (n * dx * du = lam * |d|).
"""

from __future__ import annotations

import functools
import logging

import numpy as np

from config import SAMPLING_REL_TOL
from errors import AliasingError, ConfigurationError
from optics.grid import ComplexField, Grid1D

logger = logging.getLogger(__name__)


def sampling_margin(source: Grid1D, target: Grid1D, wavelength: float, distance: float) -> float:
    """Ratio of the worst cross-term phase step to pi (<= 1 means adequately sampled)."""
    offset = abs(target.center - source.center)
    scale = wavelength * abs(distance)
    step_in = source.pitch * (target.extent + 2.0 * offset) / scale
    step_out = target.pitch * (source.extent + 2.0 * offset) / scale
    return max(step_in, step_out)


def check_sampling(source: Grid1D, target: Grid1D, wavelength: float, distance: float) -> None:
    margin = sampling_margin(source, target, wavelength, distance)
    if margin > 1.0 + SAMPLING_REL_TOL:
        raise AliasingError(
            f"Fresnel kernel undersampled for d={distance:.6g} m: phase step {margin:.4g}*pi "
            f"(source pitch {source.pitch:.4g} m x {source.n_points}, "
            f"target pitch {target.pitch:.4g} m x {target.n_points})",
            source_grid=source,
            target_grid=target,
        )


@functools.lru_cache(maxsize=32)
def fresnel_kernel(source: Grid1D, target: Grid1D, wavelength: float, distance: float) -> np.ndarray:
    """(target.n_points x source.n_points) propagation matrix, read-only and cached."""
    if not wavelength > 0:
        raise ConfigurationError(f"wavelength must be positive, got {wavelength}")
    if distance == 0 or not np.isfinite(distance):
        raise ConfigurationError(f"propagation distance must be finite and non-zero, got {distance}")
    check_sampling(source, target, wavelength, distance)

    lam_d = wavelength * distance
    u = target.coordinates()[:, None]
    x = source.coordinates()[None, :]
    prefactor = source.pitch / np.sqrt(complex(-1j * lam_d))
    kernel = prefactor * np.exp(-1j * np.pi * (u - x) ** 2 / lam_d)
    kernel.setflags(write=False)
    logger.debug("built Fresnel kernel %s for d=%.4g m", kernel.shape, distance)
    return kernel


def fresnel_propagate(field: ComplexField, distance: float, target: Grid1D) -> ComplexField:
    kernel = fresnel_kernel(field.grid, target, field.wavelength, float(distance))
    return ComplexField(target, kernel @ field.amplitude, field.wavelength)
