"""
Run configuration: JSON files or bundled presets, validated with pydantic.

Unknown keys are rejected at every level. The geometry section enforces the
Fourier condition d1 = d21 + d22 when d1 is given explicitly.
"""

from __future__ import annotations

import json
import math
import os
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

import config as defaults
from errors import ConfigurationError, GICSError
from optics.grid import Grid1D
from optics.objects import PhaseObject, make_phase_slits
from optics.speckle import SourceModel
from scheme.geometry import SchemeGeometry
from sensing.system import SensingMode


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GeometrySettings(_Section):
    wavelength: float = Field(defaults.WAVELENGTH, gt=0, description="Wavelength in m.")
    d21: float = Field(defaults.D21, gt=0, description="Source to object distance in m.")
    d22: float = Field(defaults.D22, gt=0, description="Object to test detector distance in m.")
    d1: float | None = Field(
        None, gt=0, description="Source to reference detector distance in m; defaults to d21 + d22."
    )
    source_width: float = Field(defaults.SOURCE_WIDTH, gt=0, description="Full source aperture in m.")
    source_points: int = Field(defaults.SOURCE_POINTS, ge=2, description="Samples across the source grid.")
    object_points: int = Field(defaults.OBJECT_POINTS, ge=2, description="Samples across the object grid.")
    detector_points: int = Field(defaults.DETECTOR_POINTS, ge=2, description="Pixels on D1 and on D2.")
    object_pitch: float | None = Field(
        None, gt=0, description="Object grid pitch in m; defaults to wavelength*d21/source_width."
    )
    d1_pitch: float | None = Field(
        None, gt=0, description="D1 pitch in m; defaults to wavelength*d22/(object_points*object_pitch)."
    )
    d2_pitch: float | None = Field(None, gt=0, description="D2 pitch in m; defaults to the D1 default.")
    d1_center: float = Field(0.0, description="D1 centre coordinate in m.")
    d2_center: float = Field(0.0, description="D2 centre coordinate in m.")
    mean_intensity: float = Field(defaults.MEAN_INTENSITY, ge=0, description="Mean source intensity.")
    reference_path: Literal["relay", "direct"] = Field(
        "relay", description="relay: via the object-plane grid; direct: single d1 step."
    )

    @model_validator(mode="after")
    def _fourier_condition(self) -> "GeometrySettings":
        if self.d1 is not None and abs(self.d1 - (self.d21 + self.d22)) >= defaults.FOURIER_CONDITION_TOL:
            raise ValueError(
                f"Fourier condition d1 = d21 + d22 violated: d1={self.d1} m, "
                f"d21 + d22 = {self.d21 + self.d22} m"
            )
        return self

    def to_geometry(self, seed: int) -> SchemeGeometry:
        source_grid = Grid1D(self.source_points, self.source_width / self.source_points)
        object_pitch = self.object_pitch or self.wavelength * self.d21 / self.source_width
        object_grid = Grid1D(self.object_points, object_pitch)
        matched_pitch = self.wavelength * self.d22 / (self.object_points * object_pitch)
        return SchemeGeometry(
            wavelength=self.wavelength,
            d1=self.d1 if self.d1 is not None else self.d21 + self.d22,
            d21=self.d21,
            d22=self.d22,
            source=SourceModel(self.source_width, source_grid, self.mean_intensity, seed, self.wavelength),
            object_grid=object_grid,
            d1_grid=Grid1D(self.detector_points, self.d1_pitch or matched_pitch, self.d1_center),
            d2_grid=Grid1D(self.detector_points, self.d2_pitch or matched_pitch, self.d2_center),
            reference_path=self.reference_path,
        )


class ObjectSettings(_Section):
    n_slits: int = Field(defaults.N_SLITS, ge=1, description="Number of slits.")
    slit_width: float = Field(defaults.SLIT_WIDTH, gt=0, description="Slit width a in m.")
    gap: float | None = Field(None, ge=0, description="Gap between slits in m; defaults to a/2.")
    phase_depth: float = Field(defaults.PHASE_DEPTH, description="Phase on the slits in rad.")

    def build(self, grid: Grid1D) -> PhaseObject:
        gap = self.gap if self.gap is not None else self.slit_width / 2.0
        return make_phase_slits(self.n_slits, self.slit_width, gap, self.phase_depth, grid)


class AcquisitionSettings(_Section):
    n_shots: int = Field(defaults.N_SHOTS, ge=1, description="Shots K.")
    r2_pixels: list[int] | None = Field(
        None, description="Test-detector pixels used as equations; defaults to the central pixel."
    )
    noise_sigma: float = Field(0.0, ge=0, description="Relative additive Gaussian detector noise.")
    seed: int = Field(defaults.MASTER_SEED, ge=0, description="Master seed of the run.")
    record_field: bool = Field(True, description="Record the complex reference field (homodyne).")

    @field_validator("r2_pixels")
    @classmethod
    def _non_empty(cls, value: list[int] | None) -> list[int] | None:
        if value is not None and not value:
            raise ValueError("r2_pixels must not be empty")
        return value


class SensingSettings(_Section):
    modes: list[str] = Field(
        default_factory=lambda: ["homodyne", "conjecture-spherical", "diagonal"],
        description="homodyne, diagonal, conjecture-zero, conjecture-spherical, conjecture-random.",
    )
    diagonal_convention: Literal["exact", "paper"] = Field(
        "exact", description="exact: diagonal carries I_r; paper: diagonal carries sqrt(I_r)."
    )
    conjecture_seed: int = Field(defaults.CONJECTURE_SEED, ge=0, description="Seed of the random phase guess.")
    normalize_rows: bool = Field(True, description="Scale each row and its y entry to unit row norm.")

    @field_validator("modes")
    @classmethod
    def _known_modes(cls, value: list[str]) -> list[str]:
        if not value:
            raise ValueError("at least one sensing mode is required")
        for name in value:
            try:
                SensingMode.parse(name)
            except GICSError as exc:
                raise ValueError(str(exc)) from None
        return value

    def mode(self, name: str) -> SensingMode:
        return SensingMode.parse(name, self.diagonal_convention, self.conjecture_seed)


class SolverSettings(_Section):
    lambda_ratios: list[float] = Field(
        default_factory=lambda: list(defaults.LAMBDA_RATIOS),
        description="Lambda grid as fractions of ||A'^T y||_inf; one entry skips selection.",
    )
    max_iters: int = Field(defaults.SOLVER_MAX_ITERS, ge=1)
    tol: float = Field(defaults.SOLVER_TOL, gt=0)
    nonneg_diagonal: bool = True
    debias: bool = False
    holdout_fraction: float = Field(defaults.HOLDOUT_FRACTION, gt=0, lt=1)
    method: Literal["auto", "l1", "rank-one"] = Field(
        "auto", description="auto: rank-one for full modes, l1 for diagonal; l1 builds the packed matrix."
    )
    restarts: int = Field(defaults.RANK_ONE_RESTARTS, ge=1, description="Rank-one starting points.")

    @field_validator("lambda_ratios")
    @classmethod
    def _positive(cls, value: list[float]) -> list[float]:
        if not value or any(not (v > 0 and math.isfinite(v)) for v in value):
            raise ValueError("lambda_ratios must be a non-empty list of positive numbers")
        return value


class SweepSettings(_Section):
    k_values: list[int] = Field(default_factory=lambda: [50, 500])
    modes: list[str] = Field(default_factory=lambda: list(defaults.SWEEP_MODES))
    n_seeds: int = Field(defaults.SWEEP_N_SEEDS, ge=1)

    @field_validator("k_values")
    @classmethod
    def _ascending(cls, value: list[int]) -> list[int]:
        if not value or any(k < 1 for k in value) or value != sorted(value):
            raise ValueError("k_values must be positive and ascending")
        return value

    @field_validator("modes")
    @classmethod
    def _known_modes(cls, value: list[str]) -> list[str]:
        for name in value:
            if name == "cgi":
                continue
            try:
                SensingMode.parse(name)
            except GICSError as exc:
                raise ValueError(str(exc)) from None
        return value


class RunConfig(_Section):
    name: str = Field("gics", description="Run label.")
    geometry: GeometrySettings = Field(default_factory=GeometrySettings)
    object: ObjectSettings = Field(default_factory=ObjectSettings)
    acquisition: AcquisitionSettings = Field(default_factory=AcquisitionSettings)
    sensing: SensingSettings = Field(default_factory=SensingSettings)
    solver: SolverSettings = Field(default_factory=SolverSettings)
    sweep: SweepSettings = Field(default_factory=SweepSettings)
    output_dir: str = Field("runs/gics", description="Directory receiving all artifacts.")

    @model_validator(mode="after")
    def _method_fits_modes(self) -> "RunConfig":
        if self.solver.method == "rank-one" and "diagonal" in self.sensing.modes + self.sweep.modes:
            raise ValueError("solver.method rank-one cannot solve the diagonal mode; use auto")
        return self

    @property
    def seed(self) -> int:
        return self.acquisition.seed

    def build_geometry(self, seed: int | None = None) -> SchemeGeometry:
        geometry = self.geometry.to_geometry(self.seed if seed is None else seed)
        geometry.validate()
        return geometry

    def build_object(self, geometry: SchemeGeometry) -> PhaseObject:
        return self.object.build(geometry.object_grid)

    def r2_pixels(self) -> list[int]:
        return self.acquisition.r2_pixels or [self.geometry.detector_points // 2]

    def with_overrides(self, seed: int | None = None, output_dir: str | None = None) -> "RunConfig":
        data = self.model_dump()
        if seed is not None:
            data["acquisition"]["seed"] = seed
        if output_dir is not None:
            data["output_dir"] = output_dir
        return parse_config(data, source="overrides")


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def _format_validation(exc: ValidationError, source: str) -> str:
    lines = [f"invalid configuration in {source}:"]
    for err in exc.errors():
        key = ".".join(str(part) for part in err["loc"]) or "<root>"
        lines.append(f"  {key}: {err['msg']}")
    return "\n".join(lines)


def parse_config(data: dict[str, Any], source: str = "<dict>") -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(_format_validation(exc, source)) from None


def preset_path(name: str) -> str:
    """Locate a bundled preset (repository checkout or container mount)."""
    filename = f"{name}.json"
    possible_paths = [
        os.path.join(os.path.dirname(__file__), "..", "data", "presets", filename),
        os.path.join("/data", "presets", filename),
    ]
    for path in possible_paths:
        if os.path.exists(path):
            return os.path.normpath(path)
    raise ConfigurationError(f"preset not found: {name}")


def load_config(path_or_preset: str) -> RunConfig:
    if os.path.isfile(path_or_preset):
        path = path_or_preset
    elif path_or_preset in defaults.PRESETS:
        path = preset_path(path_or_preset)
    else:
        raise ConfigurationError(
            f"config {path_or_preset!r} is neither a file nor a preset ({', '.join(defaults.PRESETS)})"
        )

    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a JSON object")
    return parse_config(data, source=path)


def config_reference() -> dict[str, Any]:
    """JSON schema of RunConfig with every default and description."""
    return RunConfig.model_json_schema()
