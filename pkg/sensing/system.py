"""
Sensing-system assembly: one real equation per (shot, test pixel) pair.

For a test pixel r2 and reference field e on D1 (pixel coordinates r1_i),

    I_w(r2) = sum_ij A_ij * conj(T~_i) * T~_j,
    A_ij    = conj(e_i) * e_j * exp(-i*pi*(r1_i**2 - r1_j**2) / (lam*d22)),
    f_i     = (r1_i - r2) / (lam*d22),

and T~ is the object spectrum scaled by the D1 pitch over lam*d22 (see
spectrum_unknowns). Packing A row by row gives the real system A' x = y.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from config import ALIGNMENT_TOL, CONJECTURE_SEED
from errors import AlignmentError, DataError, ModeError, ShapeError
from optics.objects import PhaseObject, transform_samples
from scheme.acquisition import ShotRecord
from scheme.geometry import SchemeGeometry
from sensing.packing import DiagonalConvention, HermitianPacking, diagonal_coefficients

logger = logging.getLogger(__name__)


class ModeKind(str, Enum):
    HOMODYNE = "homodyne"
    CONJECTURE = "conjecture"
    DIAGONAL = "diagonal"


CONJECTURE_STRATEGIES = ("zero", "spherical", "random")


@dataclass(frozen=True)
class SensingMode:
    kind: ModeKind
    strategy: str | None = None
    convention: DiagonalConvention = DiagonalConvention.EXACT
    conjecture_seed: int = CONJECTURE_SEED

    def __post_init__(self):
        object.__setattr__(self, "kind", ModeKind(self.kind))
        object.__setattr__(self, "convention", DiagonalConvention(self.convention))
        if self.kind is ModeKind.CONJECTURE and self.strategy not in CONJECTURE_STRATEGIES:
            raise ModeError(
                f"phase conjecture needs a strategy in {CONJECTURE_STRATEGIES}, got {self.strategy!r}"
            )

    @property
    def name(self) -> str:
        if self.kind is ModeKind.CONJECTURE:
            return f"conjecture-{self.strategy}"
        return self.kind.value

    @property
    def full(self) -> bool:
        return self.kind is not ModeKind.DIAGONAL

    @classmethod
    def parse(cls, name: str, convention: str | DiagonalConvention = DiagonalConvention.EXACT,
              conjecture_seed: int = CONJECTURE_SEED) -> "SensingMode":
        """'homodyne', 'diagonal', or 'conjecture-<zero|spherical|random>'."""
        kind, _, strategy = name.partition("-")
        try:
            kind = ModeKind(kind)
        except ValueError:
            raise ModeError(f"unknown sensing mode {name!r}") from None
        if kind is not ModeKind.CONJECTURE and strategy:
            raise ModeError(f"mode {kind.value!r} takes no strategy, got {name!r}")
        return cls(kind, strategy or None, DiagonalConvention(convention), conjecture_seed)


@dataclass
class SensingSystem:
    # None for full modes built without the packed matrix; the rows then live in `vectors`
    a_prime: np.ndarray | None
    y: np.ndarray
    freq_axis: np.ndarray
    mode: SensingMode
    r2_pixels: list[int]
    detector_points: int
    row_norms: np.ndarray | None = None
    meta: dict = field(default_factory=dict)
    # full modes: row k reads y_k = |vectors[k] . T~| ** 2 on the union axis
    vectors: np.ndarray | None = None
    normalized: bool = True

    @property
    def r2_pixel(self) -> int:
        return self.r2_pixels[0]

    @property
    def lifted(self) -> bool:
        return self.a_prime is not None

    @property
    def n_rows(self) -> int:
        return int(len(self.y))

    @property
    def n_unknowns(self) -> int:
        if self.a_prime is not None:
            return int(self.a_prime.shape[1])
        return self.packing.size

    @property
    def packing(self) -> HermitianPacking:
        return HermitianPacking(len(self.freq_axis))

    def check_detector(self, n_points: int) -> None:
        if n_points != self.detector_points:
            raise ShapeError(
                f"system was built for {self.detector_points} detector pixels, data has {n_points}"
            )

    def require_lifted(self) -> np.ndarray:
        if self.a_prime is None:
            raise ShapeError(
                f"{self.mode.name} system was built without the packed matrix; rebuild it lifted"
            )
        return self.a_prime

    def diagonal_weights(self) -> np.ndarray:
        """Coefficient of each |T~_i|^2 (or |T~_i|) slot per row, from the vectors."""
        if self.vectors is None:
            raise ShapeError(f"{self.mode.name} system carries no measurement vectors")
        power = np.abs(self.vectors) ** 2
        if self.mode.convention is DiagonalConvention.EXACT:
            return power
        # sqrt(i_r) / s with |w|^2 = i_r / s
        scale = np.ones(self.n_rows) if not self.normalized or self.row_norms is None else self.row_norms
        return np.sqrt(power) / np.sqrt(np.where(scale > 0, scale, 1.0))[:, None]

    def predict(self, x: np.ndarray) -> np.ndarray:
        """A' x, evaluated from the vectors when the packed matrix was not built."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_unknowns,):
            raise ShapeError(f"unknown vector has {x.size} entries, system has {self.n_unknowns}")
        if self.a_prime is not None:
            return self.a_prime @ x
        packing = self.packing
        b = packing.unpack(x)
        w = self.vectors
        cross = np.real(np.einsum("ki,ij,kj->k", np.conj(w), b, w))
        diag = np.real(np.diag(b))
        return cross - (np.abs(w) ** 2) @ diag + self.diagonal_weights() @ diag


def measurement_vector(e_r: np.ndarray, geometry: SchemeGeometry,
                       r1: np.ndarray | None = None) -> np.ndarray:
    """v_i = e_i exp(i pi r1_i^2/(lam d22)), so that I_w(r2) = |v . T~|^2."""
    e_r = np.asarray(e_r, dtype=np.complex128)
    if r1 is None:
        r1 = geometry.d1_grid.coordinates()
    r1 = np.asarray(r1, dtype=np.float64)
    if e_r.shape != r1.shape:
        raise ShapeError(f"reference field has {e_r.shape} samples, D1 has {r1.shape}")
    return e_r * np.exp(1j * np.pi * r1 ** 2 / geometry.lambda_d22)


def complex_sensing_row(e_r: np.ndarray, geometry: SchemeGeometry,
                        r1: np.ndarray | None = None) -> np.ndarray:
    """A_ij = conj(e_i) e_j exp(-i pi (r1_i^2 - r1_j^2)/(lam d22)); Hermitian by construction."""
    v = measurement_vector(e_r, geometry, r1)
    return np.outer(np.conj(v), v)


def packed_row_norm(v: np.ndarray, diag: np.ndarray) -> float:
    """||pack_row(outer(conj v, v), diag)|| without building the row."""
    power = np.abs(v) ** 2
    total = float(np.sum(power))
    return float(np.sqrt(np.sum(diag ** 2) + 2.0 * (total ** 2 - np.sum(power ** 2))))


def conjecture_field(i_r: np.ndarray, geometry: SchemeGeometry, strategy: str,
                     seed: int = CONJECTURE_SEED) -> np.ndarray:
    """sqrt(i_r) with a guessed phase profile on D1.

    spherical: the curvature of a point source at distance d1, which under the
    propagation sign used here is -pi r1^2/(lam d1).
    """
    i_r = np.asarray(i_r, dtype=np.float64)
    if np.any(i_r < 0):
        raise DataError("reference intensity has negative entries")
    amplitude = np.sqrt(i_r)
    if strategy == "zero":
        return amplitude.astype(np.complex128)
    if strategy == "spherical":
        r1 = geometry.d1_grid.coordinates()
        if r1.shape != i_r.shape:
            raise ShapeError(f"i_r has {i_r.shape} entries, D1 has {r1.shape}")
        return amplitude * np.exp(-1j * np.pi * r1 ** 2 / (geometry.wavelength * geometry.d1))
    if strategy == "random":
        phase = np.random.default_rng([int(seed)]).uniform(0.0, 2.0 * np.pi, i_r.shape)
        return amplitude * np.exp(1j * phase)
    raise ModeError(f"unknown phase conjecture strategy {strategy!r}")


def alignment_offsets(geometry: SchemeGeometry, r2_pixels: list[int]) -> tuple[np.ndarray, int]:
    """Per-pixel offsets into the union frequency axis, and its length."""
    n2 = geometry.d2_grid.n_points
    for px in r2_pixels:
        if not 0 <= px < n2:
            raise ShapeError(f"r2 pixel {px} outside the test detector (0..{n2 - 1})")

    p1 = geometry.d1_grid.pitch
    r2 = np.array([geometry.d2_grid.coordinate(px) for px in r2_pixels])
    shifts = (r2 - r2[0]) / p1
    rounded = np.round(shifts)
    bad = np.abs(shifts - rounded) > ALIGNMENT_TOL
    if np.any(bad):
        px = r2_pixels[int(np.argmax(bad))]
        raise AlignmentError(
            f"r2 pixel {px} is offset by {shifts[int(np.argmax(bad))]:.6g} D1 pitches; "
            "only integer offsets can share a frequency axis"
        )
    delta = rounded.astype(int)
    offsets = delta.max() - delta
    return offsets, geometry.d1_grid.n_points + int(delta.max() - delta.min())


def union_freq_axis(geometry: SchemeGeometry, r2_pixels: list[int]) -> np.ndarray:
    offsets, size = alignment_offsets(geometry, r2_pixels)
    p1 = geometry.d1_grid.pitch
    r1_0 = geometry.d1_grid.coordinate(0)
    r2_ref = geometry.d2_grid.coordinate(r2_pixels[0])
    k = np.arange(size) - offsets[0]
    return (r1_0 + k * p1 - r2_ref) / geometry.lambda_d22


def reference_field(shot: ShotRecord, geometry: SchemeGeometry, mode: SensingMode) -> np.ndarray:
    if mode.kind is ModeKind.HOMODYNE:
        if shot.e_r is None:
            raise ModeError(f"homodyne mode needs the recorded reference field (shot {shot.shot_index})")
        return shot.e_r
    return conjecture_field(shot.i_r, geometry, mode.strategy, mode.conjecture_seed)


def build_system(
    shots: list[ShotRecord],
    geometry: SchemeGeometry,
    mode: SensingMode,
    r2_pixels: list[int] | None = None,
    normalize_rows: bool = True,
    lifted: bool = True,
) -> SensingSystem:
    """One row per (shot, r2 pixel). With lifted=False a full mode keeps only the
    measurement vectors (rows x union size) and skips the n^2 packed matrix."""
    if not shots:
        raise ShapeError("no shots to build a sensing system from")
    geometry.validate()
    if r2_pixels is None:
        r2_pixels = [geometry.d2_grid.n_points // 2]
    r2_pixels = [int(px) for px in r2_pixels]
    if not r2_pixels:
        raise ShapeError("at least one r2 pixel is required")

    n = geometry.d1_grid.n_points
    offsets, size = alignment_offsets(geometry, r2_pixels)
    packing = HermitianPacking(size)
    columns = packing.size if mode.full else size
    lifted = lifted or not mode.full
    n_rows = len(shots) * len(r2_pixels)

    rows = np.zeros((n_rows, columns)) if lifted else None
    vectors = np.zeros((n_rows, size), dtype=np.complex128) if mode.full else None
    norms = np.zeros(n_rows)
    y = np.zeros(n_rows)
    r = 0
    for shot in shots:
        if shot.i_r.shape != (n,):
            raise ShapeError(f"shot {shot.shot_index} has {shot.i_r.size} D1 pixels, geometry has {n}")
        if shot.i_w.shape != (geometry.d2_grid.n_points,):
            raise ShapeError(f"shot {shot.shot_index} has {shot.i_w.size} D2 pixels")

        if mode.full:
            v = measurement_vector(reference_field(shot, geometry, mode), geometry)
            a = np.outer(np.conj(v), v)
        diag = diagonal_coefficients(shot.i_r, mode.convention)

        for px, o in zip(r2_pixels, offsets):
            window = slice(o, o + n)
            if mode.full:
                vectors[r, window] = v
                if lifted:
                    a_u = np.zeros((size, size), dtype=np.complex128)
                    a_u[window, window] = a
                    i_u = np.zeros(size)
                    i_u[window] = shot.i_r
                    rows[r] = packing.pack_row(a_u, i_u, mode.convention)
                else:
                    norms[r] = packed_row_norm(v, diag)
            else:
                rows[r, window] = diag
            y[r] = shot.i_w[px]
            r += 1

    if lifted:
        norms = np.linalg.norm(rows, axis=1)
    if normalize_rows:
        scale = np.where(norms > 0, norms, 1.0)
        if lifted:
            rows /= scale[:, None]
        if vectors is not None:
            vectors /= np.sqrt(scale)[:, None]
        y /= scale

    logger.info("built %s system: %d rows x %d unknowns%s", mode.name, n_rows, columns,
                "" if lifted else " (vectors only)")
    return SensingSystem(
        a_prime=rows,
        y=y,
        freq_axis=union_freq_axis(geometry, r2_pixels),
        mode=mode,
        r2_pixels=r2_pixels,
        detector_points=n,
        row_norms=norms,
        vectors=vectors,
        normalized=normalize_rows,
    )


def spectrum_unknowns(obj: PhaseObject, geometry: SchemeGeometry, freq_axis: np.ndarray) -> np.ndarray:
    """T~(f) = (p1 / (lam d22)) * sum_x t(x) exp(-2 pi i f x) dx."""
    return geometry.d1_grid.pitch / geometry.lambda_d22 * transform_samples(obj, freq_axis)


def true_unknowns(obj: PhaseObject, geometry: SchemeGeometry, system: SensingSystem) -> np.ndarray:
    """Packed ground truth for the system's unknown vector."""
    t = spectrum_unknowns(obj, geometry, system.freq_axis)
    paper = system.mode.convention is DiagonalConvention.PAPER_SQRT
    if system.mode.full:
        x = system.packing.pack(np.outer(np.conj(t), t))
        if paper:
            x[system.packing.diagonal_slots()] = np.abs(t)
        return x
    return np.abs(t) if paper else np.abs(t) ** 2


def forward_residual(system: SensingSystem, x: np.ndarray) -> float:
    """||A' x - y|| / ||y||."""
    predicted = system.predict(x)
    norm_y = float(np.linalg.norm(system.y))
    if norm_y == 0:
        return 0.0 if not np.any(predicted) else float("inf")
    return float(np.linalg.norm(predicted - system.y)) / norm_y
