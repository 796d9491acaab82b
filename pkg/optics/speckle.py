"""
Pseudo-thermal source: fully developed speckle behind a rotating diffuser.

Each shot is an independent circular complex Gaussian amplitude per source
sample inside the aperture (correlation length one sample), zero outside.
The random stream of shot k is seeded by (seed, k), so any shot can be
regenerated on its own and shot lists of different length share prefixes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from config import MEAN_INTENSITY, SAMPLING_REL_TOL, WAVELENGTH
from errors import ConfigurationError
from optics.grid import ComplexField, Grid1D


@dataclass(frozen=True)
class SourceModel:
    width: float
    grid: Grid1D
    mean_intensity: float = MEAN_INTENSITY
    seed: int = 0
    wavelength: float = WAVELENGTH

    def validate(self) -> None:
        if not self.width > 0:
            raise ConfigurationError(f"source width must be positive, got {self.width}")
        if self.width > self.grid.extent * (1.0 + SAMPLING_REL_TOL):
            raise ConfigurationError(
                f"source width {self.width:.4g} m exceeds grid extent {self.grid.extent:.4g} m"
            )
        if self.mean_intensity < 0:
            raise ConfigurationError("mean_intensity must be non-negative")
        if self.seed < 0:
            raise ConfigurationError("seed must be a non-negative integer")

    def aperture(self) -> np.ndarray:
        offset = np.abs(self.grid.coordinates() - self.grid.center)
        return offset <= self.width / 2.0 * (1.0 + SAMPLING_REL_TOL)

    def with_seed(self, seed: int) -> "SourceModel":
        return SourceModel(self.width, self.grid, self.mean_intensity, int(seed), self.wavelength)


def shot_rng(seed: int, shot_index: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one shot; stream 0 is speckle, 1 is detector noise."""
    key = [int(seed), int(shot_index)] if stream == 0 else [int(seed), int(shot_index), int(stream)]
    return np.random.default_rng(key)


def make_speckle_field(source: SourceModel, shot_index: int) -> ComplexField:
    if shot_index < 0:
        raise ConfigurationError(f"shot_index must be >= 0, got {shot_index}")
    source.validate()

    rng = shot_rng(source.seed, shot_index)
    n = source.grid.n_points
    gauss = rng.standard_normal((2, n))
    amplitude = np.sqrt(source.mean_intensity / 2.0) * (gauss[0] + 1j * gauss[1])
    amplitude = np.where(source.aperture(), amplitude, 0.0)
    return ComplexField(source.grid, amplitude, source.wavelength)
