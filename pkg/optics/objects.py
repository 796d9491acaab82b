"""
Transmission objects, the object plane interaction, and the ground-truth spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from config import PHASE_DEPTH, PURE_PHASE_TOL, SAMPLING_REL_TOL
from errors import ConfigurationError, ShapeError
from optics.grid import ComplexField, Grid1D


@dataclass(frozen=True)
class PhaseObject:
    grid: Grid1D
    transmission: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.transmission, dtype=np.complex128)
        if t.shape != (self.grid.n_points,):
            raise ShapeError(f"transmission has {t.shape} samples, grid has {self.grid.n_points}")
        object.__setattr__(self, "transmission", t)

    @property
    def is_pure_phase(self) -> bool:
        return bool(np.all(np.abs(np.abs(self.transmission) - 1.0) <= PURE_PHASE_TOL))

    @classmethod
    def uniform(cls, grid: Grid1D, value: complex = 1.0) -> "PhaseObject":
        return cls(grid, np.full(grid.n_points, value, dtype=np.complex128))


@dataclass
class SpectrumEstimate:
    """|T(f)| samples on a physical frequency axis (cycles/m), unit peak."""

    freq_axis: np.ndarray
    magnitude: np.ndarray
    provenance: str
    hermitian: np.ndarray | None = None
    lambda_d22: float | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.freq_axis = np.asarray(self.freq_axis, dtype=np.float64)
        self.magnitude = np.asarray(self.magnitude, dtype=np.float64)
        if self.freq_axis.shape != self.magnitude.shape:
            raise ShapeError(
                f"frequency axis {self.freq_axis.shape} and magnitude {self.magnitude.shape} differ"
            )

    @property
    def positions(self) -> np.ndarray:
        """Detector-plane offsets r = f * lambda * d22."""
        if self.lambda_d22 is None:
            raise ShapeError("estimate carries no lambda*d22 scale")
        return self.freq_axis * self.lambda_d22

    def relative_phase(self) -> np.ndarray:
        """arg(conj(T_peak) * T_j) for every bin j, from the Hermitian estimate."""
        if self.hermitian is None:
            raise ShapeError(f"{self.provenance} estimate has no off-diagonal information")
        peak = int(np.argmax(self.magnitude))
        return np.angle(self.hermitian[peak, :])


def unit_peak(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    peak = np.max(np.abs(values)) if values.size else 0.0
    if peak == 0 or not np.isfinite(peak):
        return np.zeros_like(values)
    return values / peak


def apply_object(field: ComplexField, obj: PhaseObject) -> ComplexField:
    if not field.grid.same_as(obj.grid):
        raise ShapeError(f"field grid {field.grid} does not match object grid {obj.grid}")
    return ComplexField(field.grid, field.amplitude * obj.transmission, field.wavelength)


def make_phase_slits(
    n_slits: int,
    slit_width: float,
    gap: float,
    phase_depth: float = PHASE_DEPTH,
    grid: Grid1D | None = None,
) -> PhaseObject:
    """Pure-phase multi-slit object centred on the grid; phase_depth on the slits, 0 elsewhere."""
    if grid is None:
        raise ConfigurationError("make_phase_slits needs a grid")
    if n_slits < 1:
        raise ConfigurationError(f"need at least one slit, got {n_slits}")
    if slit_width <= 0 or gap < 0:
        raise ConfigurationError("slit width must be positive and gap non-negative")

    pattern = n_slits * slit_width + (n_slits - 1) * gap
    if pattern > grid.extent * (1.0 + SAMPLING_REL_TOL):
        raise ConfigurationError(
            f"slit pattern {pattern * 1e3:.4g} mm is wider than the object grid "
            f"{grid.extent * 1e3:.4g} mm"
        )

    x = grid.coordinates() - grid.center
    start = -pattern / 2.0
    on_slit = np.zeros(grid.n_points, dtype=bool)
    for k in range(n_slits):
        lo = start + k * (slit_width + gap)
        on_slit |= (x >= lo) & (x < lo + slit_width)

    phase = np.where(on_slit, phase_depth, 0.0)
    return PhaseObject(grid, np.exp(1j * phase))


def transform_samples(obj: PhaseObject, freqs: np.ndarray) -> np.ndarray:
    """T(f) = sum_x t(x) exp(-2 pi i f x) dx by direct summation."""
    freqs = np.asarray(freqs, dtype=np.float64)
    x = obj.grid.coordinates()
    phase = np.exp(-2j * np.pi * np.outer(freqs, x))
    return phase @ obj.transmission * obj.grid.pitch


def default_freq_axis(grid: Grid1D, oversample: int = 1) -> np.ndarray:
    m = int(oversample) * grid.n_points
    return (np.arange(m) - m // 2) / (m * grid.pitch)


def spectrum_oracle(
    obj: PhaseObject,
    lambda_d22: float,
    freqs: np.ndarray | None = None,
    oversample: int = 1,
) -> SpectrumEstimate:
    if freqs is None:
        freqs = default_freq_axis(obj.grid, oversample)
    magnitude = np.abs(transform_samples(obj, freqs))
    return SpectrumEstimate(freqs, unit_peak(magnitude), "oracle", lambda_d22=lambda_d22)
