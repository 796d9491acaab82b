"""
Two-arm lensless Fourier-transform geometry.

    source --d21--> object --d22--> D2 (test arm)
    source ------d1 = d21 + d22---> D1 (reference arm)

With reference_path="relay" the reference field is carried through the
object-plane grid (free space, no object) before reaching D1; "direct"
propagates d1 in a single step.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from config import (
    D21,
    D22,
    DETECTOR_POINTS,
    FOURIER_CONDITION_TOL,
    MEAN_INTENSITY,
    OBJECT_POINTS,
    SOURCE_POINTS,
    SOURCE_WIDTH,
    WAVELENGTH,
)
from errors import ConfigurationError
from optics.grid import Grid1D
from optics.speckle import SourceModel

REFERENCE_PATHS = ("relay", "direct")


@dataclass(frozen=True)
class SchemeGeometry:
    wavelength: float
    d1: float
    d21: float
    d22: float
    source: SourceModel
    object_grid: Grid1D
    d1_grid: Grid1D
    d2_grid: Grid1D
    reference_path: str = "relay"

    @property
    def lambda_d22(self) -> float:
        return self.wavelength * self.d22

    def validate(self) -> None:
        for name in ("d1", "d21", "d22"):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigurationError(f"{name} must be positive, got {value}")
        if abs(self.d1 - (self.d21 + self.d22)) >= FOURIER_CONDITION_TOL:
            raise ConfigurationError(
                f"Fourier condition violated: d1 = {self.d1!r} m but d21 + d22 = "
                f"{self.d21 + self.d22!r} m"
            )
        if not self.wavelength > 0:
            raise ConfigurationError(f"wavelength must be positive, got {self.wavelength}")
        if self.source.wavelength != self.wavelength:
            raise ConfigurationError("source wavelength differs from scheme wavelength")
        if self.reference_path not in REFERENCE_PATHS:
            raise ConfigurationError(
                f"reference_path must be one of {REFERENCE_PATHS}, got {self.reference_path!r}"
            )
        self.source.validate()

    def with_seed(self, seed: int) -> "SchemeGeometry":
        return replace(self, source=self.source.with_seed(seed))

    def with_mean_intensity(self, mean_intensity: float) -> "SchemeGeometry":
        return replace(self, source=replace(self.source, mean_intensity=mean_intensity))

    @classmethod
    def matched(
        cls,
        wavelength: float = WAVELENGTH,
        d21: float = D21,
        d22: float = D22,
        source_width: float = SOURCE_WIDTH,
        source_points: int = SOURCE_POINTS,
        object_points: int = OBJECT_POINTS,
        detector_points: int = DETECTOR_POINTS,
        mean_intensity: float = MEAN_INTENSITY,
        seed: int = 0,
        reference_path: str = "relay",
        d1_grid: Grid1D | None = None,
        d2_grid: Grid1D | None = None,
    ) -> "SchemeGeometry":
        """Grids chained so that every propagation step is an exact discrete Fourier pair.

        The source grid spans the aperture; the object pitch is lam*d21/width,
        which makes the object-plane speckle delta-correlated sample to sample,
        and the detector pitch is lam*d22/(n*object_pitch).
        """
        source_grid = Grid1D(source_points, source_width / source_points)
        object_grid = Grid1D(object_points, wavelength * d21 / source_width)
        detector = Grid1D(detector_points, wavelength * d22 / object_grid.extent)
        source = SourceModel(source_width, source_grid, mean_intensity, seed, wavelength)
        return cls(
            wavelength=wavelength,
            d1=d21 + d22,
            d21=d21,
            d22=d22,
            source=source,
            object_grid=object_grid,
            d1_grid=d1_grid or detector,
            d2_grid=d2_grid or detector,
            reference_path=reference_path,
        )
