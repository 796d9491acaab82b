"""
Shot simulation through the two-arm scheme and the direct-quadrature check
of the test-detector intensity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from errors import ConfigurationError, ShapeError
from optics.grid import ComplexField
from optics.objects import PhaseObject, apply_object
from optics.propagation import fresnel_propagate
from optics.speckle import make_speckle_field, shot_rng
from scheme.geometry import SchemeGeometry


@dataclass
class ShotRecord:
    shot_index: int
    i_r: np.ndarray
    i_w: np.ndarray
    e_r: np.ndarray | None = None

    def __post_init__(self):
        self.i_r = np.asarray(self.i_r, dtype=np.float64)
        self.i_w = np.asarray(self.i_w, dtype=np.float64)
        if self.e_r is not None:
            self.e_r = np.asarray(self.e_r, dtype=np.complex128)
            if self.e_r.shape != self.i_r.shape:
                raise ShapeError("reference field and reference intensity lengths differ")

    @property
    def has_field(self) -> bool:
        return self.e_r is not None


def _check_inputs(geometry: SchemeGeometry, obj: PhaseObject) -> None:
    geometry.validate()
    if not obj.grid.same_as(geometry.object_grid):
        raise ConfigurationError("object grid differs from the scheme's object grid")


def _object_plane(geometry: SchemeGeometry, shot_index: int) -> tuple[ComplexField, ComplexField]:
    source = make_speckle_field(geometry.source, shot_index)
    return source, fresnel_propagate(source, geometry.d21, geometry.object_grid)


def _reference_field(geometry: SchemeGeometry, source: ComplexField, at_object: ComplexField) -> ComplexField:
    if geometry.reference_path == "direct":
        return fresnel_propagate(source, geometry.d1, geometry.d1_grid)
    return fresnel_propagate(at_object, geometry.d22, geometry.d1_grid)


def _add_noise(intensity: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    scale = sigma * float(np.mean(intensity))
    noisy = intensity + scale * rng.standard_normal(intensity.shape)
    return np.clip(noisy, 0.0, None)


def simulate_shot(
    geometry: SchemeGeometry,
    obj: PhaseObject,
    shot_index: int,
    record_field: bool = False,
    noise_sigma: float = 0.0,
) -> ShotRecord:
    """One speckle realisation fed to both arms (ideal 50/50 beam-splitter copy)."""
    _check_inputs(geometry, obj)
    if noise_sigma < 0:
        raise ConfigurationError(f"noise_sigma must be >= 0, got {noise_sigma}")

    source, at_object = _object_plane(geometry, shot_index)
    reference = _reference_field(geometry, source, at_object)
    test = fresnel_propagate(apply_object(at_object, obj), geometry.d22, geometry.d2_grid)

    i_r = reference.intensity()
    i_w = test.intensity()
    if noise_sigma > 0:
        rng = shot_rng(geometry.source.seed, shot_index, stream=1)
        i_w = _add_noise(i_w, noise_sigma, rng)
        # the recorded field pins i_r = |e_r|^2
        if not record_field:
            i_r = _add_noise(i_r, noise_sigma, rng)

    return ShotRecord(
        shot_index=shot_index,
        i_r=i_r,
        i_w=i_w,
        e_r=reference.amplitude.copy() if record_field else None,
    )


def acquire(
    geometry: SchemeGeometry,
    obj: PhaseObject,
    n_shots: int,
    record_field: bool = False,
    noise_sigma: float = 0.0,
    start_index: int = 0,
) -> list[ShotRecord]:
    if n_shots < 1:
        raise ConfigurationError(f"n_shots must be >= 1, got {n_shots}")
    return [
        simulate_shot(geometry, obj, k, record_field=record_field, noise_sigma=noise_sigma)
        for k in range(start_index, start_index + n_shots)
    ]


def quadrature_intensity(geometry: SchemeGeometry, obj: PhaseObject, shot_index: int) -> np.ndarray:
    """I_w(r2) as the double sum over object-plane pairs (x, x')."""
    _, at_object = _object_plane(geometry, shot_index)
    g = at_object.amplitude * obj.transmission
    x = geometry.object_grid.coordinates()
    lam_d = geometry.lambda_d22
    weight = geometry.object_grid.pitch ** 2 / abs(lam_d)

    out = np.empty(geometry.d2_grid.n_points)
    for m, r2 in enumerate(geometry.d2_grid.coordinates()):
        chirp = (x - r2) ** 2
        pair_phase = np.exp(1j * np.pi * (chirp[:, None] - chirp[None, :]) / lam_d)
        out[m] = weight * np.real(np.conj(g) @ pair_phase @ g)
    return out


def validate_eq3(geometry: SchemeGeometry, obj: PhaseObject, shot_index: int) -> float:
    """Max relative deviation between sequential propagation and direct quadrature."""
    sequential = simulate_shot(geometry, obj, shot_index).i_w
    quadrature = quadrature_intensity(geometry, obj, shot_index)
    scale = float(np.max(np.abs(quadrature)))
    deviation = float(np.max(np.abs(sequential - quadrature)))
    if scale == 0.0:
        return 0.0 if deviation == 0.0 else float("inf")
    return deviation / scale
