"""
Uniform 1-D sampling grids and complex optical fields on them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from errors import ConfigurationError, ShapeError


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid: coordinate(i) = center + (i - (n_points - 1)/2) * pitch."""

    n_points: int
    pitch: float
    center: float = 0.0

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ConfigurationError(f"grid needs at least 2 points, got {self.n_points}")
        if not np.isfinite(self.pitch) or self.pitch <= 0:
            raise ConfigurationError(f"grid pitch must be positive, got {self.pitch}")
        if not np.isfinite(self.center):
            raise ConfigurationError("grid center must be finite")

    @property
    def extent(self) -> float:
        return self.n_points * self.pitch

    def coordinates(self) -> np.ndarray:
        return self.center + (np.arange(self.n_points) - (self.n_points - 1) / 2.0) * self.pitch

    def coordinate(self, i: int) -> float:
        return self.center + (i - (self.n_points - 1) / 2.0) * self.pitch

    def matched(self, wavelength: float, distance: float, n_points: int | None = None,
                center: float = 0.0) -> "Grid1D":
        """Target grid for which n * pitch_in * pitch_out = wavelength * |distance|."""
        n = n_points or self.n_points
        return Grid1D(n, wavelength * abs(distance) / (n * self.pitch), center)

    def same_as(self, other: "Grid1D", rtol: float = 1e-12) -> bool:
        return (
            self.n_points == other.n_points
            and abs(self.pitch - other.pitch) <= rtol * self.pitch
            and abs(self.center - other.center) <= rtol * max(self.extent, abs(self.center))
        )


@dataclass(frozen=True)
class ComplexField:
    grid: Grid1D
    amplitude: np.ndarray
    wavelength: float

    def __post_init__(self):
        amp = np.asarray(self.amplitude, dtype=np.complex128)
        if amp.shape != (self.grid.n_points,):
            raise ShapeError(
                f"field has {amp.shape} samples, grid has {self.grid.n_points} points"
            )
        if not self.wavelength > 0:
            raise ConfigurationError(f"wavelength must be positive, got {self.wavelength}")
        object.__setattr__(self, "amplitude", amp)

    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    def energy(self) -> float:
        return float(np.sum(self.intensity()) * self.grid.pitch)

    def scaled(self, factor: complex) -> "ComplexField":
        return ComplexField(self.grid, self.amplitude * factor, self.wavelength)
