import math

import numpy as np
import pytest
from scipy import stats

from errors import AliasingError, ConfigurationError, ShapeError
from optics.grid import ComplexField, Grid1D
from optics.objects import (
    PhaseObject,
    SpectrumEstimate,
    apply_object,
    default_freq_axis,
    make_phase_slits,
    spectrum_oracle,
    transform_samples,
    unit_peak,
)
from optics.propagation import check_sampling, fresnel_kernel, fresnel_propagate, sampling_margin
from optics.speckle import SourceModel, make_speckle_field

WAVELENGTH = 632.8e-9


def _random_field(grid, seed=0):
    rng = np.random.default_rng(seed)
    return ComplexField(grid, rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points),
                        WAVELENGTH)


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------

def test_grid_coordinates_are_centred():
    grid = Grid1D(4, 1.0, center=10.0)
    assert np.allclose(grid.coordinates(), [8.5, 9.5, 10.5, 11.5])
    assert grid.coordinate(0) == 8.5
    assert grid.extent == 4.0


def test_grid_rejects_degenerate_sizes():
    with pytest.raises(ConfigurationError):
        Grid1D(1, 1.0)
    with pytest.raises(ConfigurationError):
        Grid1D(8, 0.0)


def test_field_length_must_match_grid():
    with pytest.raises(ShapeError):
        ComplexField(Grid1D(8, 1e-6), np.zeros(7), WAVELENGTH)


# ---------------------------------------------------------------------------
# Propagation
# ---------------------------------------------------------------------------

def test_propagation_inverse_consistency():
    grid = Grid1D(64, 10e-6)
    target = grid.matched(WAVELENGTH, 0.1)
    field = _random_field(grid)

    back = fresnel_propagate(fresnel_propagate(field, 0.1, target), -0.1, grid)
    error = np.max(np.abs(back.amplitude - field.amplitude)) / np.max(np.abs(field.amplitude))
    assert error < 1e-8


def test_propagation_conserves_energy_on_matched_grids():
    grid = Grid1D(64, 10e-6)
    field = _random_field(grid, seed=3)
    out = fresnel_propagate(field, 0.25, grid.matched(WAVELENGTH, 0.25))
    assert out.energy() == pytest.approx(field.energy(), rel=1e-10)


def test_propagation_is_linear():
    grid = Grid1D(32, 20e-6)
    target = grid.matched(WAVELENGTH, 0.2)
    a, b = _random_field(grid, 1), _random_field(grid, 2)
    alpha, beta = 0.3 - 1.2j, 2.0 + 0.5j

    combined = ComplexField(grid, alpha * a.amplitude + beta * b.amplitude, WAVELENGTH)
    lhs = fresnel_propagate(combined, 0.2, target).amplitude
    rhs = alpha * fresnel_propagate(a, 0.2, target).amplitude + beta * fresnel_propagate(b, 0.2, target).amplitude
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(rhs))


def test_undersampled_target_raises_with_grids():
    grid = Grid1D(64, 10e-6)
    coarse = Grid1D(64, 5 * grid.matched(WAVELENGTH, 0.1).pitch)
    assert sampling_margin(grid, coarse, WAVELENGTH, 0.1) > 1.0
    with pytest.raises(AliasingError) as info:
        check_sampling(grid, coarse, WAVELENGTH, 0.1)
    assert info.value.source_grid == grid
    assert info.value.target_grid == coarse


def test_zero_distance_rejected():
    grid = Grid1D(8, 1e-6)
    with pytest.raises(ConfigurationError):
        fresnel_kernel(grid, grid, WAVELENGTH, 0.0)


def test_kernel_is_read_only():
    grid = Grid1D(16, 10e-6)
    kernel = fresnel_kernel(grid, grid.matched(WAVELENGTH, 0.1), WAVELENGTH, 0.1)
    with pytest.raises(ValueError):
        kernel[0, 0] = 0


# ---------------------------------------------------------------------------
# Speckle source
# ---------------------------------------------------------------------------

def test_speckle_contrast_is_unity():
    grid = Grid1D(16, 3e-3 / 16)
    source = SourceModel(3e-3, grid, mean_intensity=2.0, seed=99, wavelength=WAVELENGTH)
    samples = np.concatenate([make_speckle_field(source, k).intensity() for k in range(625)])
    assert samples.size == 10_000
    assert samples.std() / samples.mean() == pytest.approx(1.0, abs=0.05)
    assert samples.mean() == pytest.approx(2.0, rel=0.05)


def test_speckle_is_reproducible_per_shot():
    grid = Grid1D(32, 1e-4)
    source = SourceModel(3.2e-3, grid, seed=4, wavelength=WAVELENGTH)
    assert np.array_equal(make_speckle_field(source, 7).amplitude, make_speckle_field(source, 7).amplitude)
    assert not np.array_equal(make_speckle_field(source, 7).amplitude, make_speckle_field(source, 8).amplitude)
    other = source.with_seed(5)
    assert not np.array_equal(make_speckle_field(source, 7).amplitude, make_speckle_field(other, 7).amplitude)


def test_speckle_is_zero_outside_aperture():
    grid = Grid1D(64, 3e-3 / 64)
    source = SourceModel(1e-3, grid, seed=1, wavelength=WAVELENGTH)
    field = make_speckle_field(source, 0)
    outside = np.abs(grid.coordinates()) > 0.5e-3 * (1 + 1e-9)
    assert np.all(field.amplitude[outside] == 0)
    assert np.all(field.amplitude[~outside] != 0)


def test_source_wider_than_grid_rejected():
    source = SourceModel(5e-3, Grid1D(16, 1e-4), wavelength=WAVELENGTH)
    with pytest.raises(ConfigurationError):
        make_speckle_field(source, 0)


# ---------------------------------------------------------------------------
# Objects and the spectrum oracle
# ---------------------------------------------------------------------------

def test_phase_slits_are_pure_phase(geometry, slits):
    assert slits.is_pure_phase
    on_slit = np.isclose(np.angle(slits.transmission), math.pi) | np.isclose(np.angle(slits.transmission), -math.pi)
    assert on_slit.sum() == 6


def test_phase_slits_wider_than_grid_rejected(geometry):
    with pytest.raises(ConfigurationError):
        make_phase_slits(5, 600e-6, 300e-6, math.pi, geometry.object_grid)


def test_apply_object_requires_matching_grid(geometry, slits):
    field = _random_field(Grid1D(16, 2 * geometry.object_grid.pitch))
    with pytest.raises(ShapeError):
        apply_object(field, slits)


def test_oracle_of_uniform_object_peaks_at_zero_frequency():
    grid = Grid1D(32, 10e-6)
    oracle = spectrum_oracle(PhaseObject.uniform(grid), lambda_d22=1e-7)
    assert oracle.freq_axis[np.argmax(oracle.magnitude)] == 0.0
    assert oracle.magnitude.max() == pytest.approx(1.0)


def test_transform_samples_matches_fft():
    grid = Grid1D(32, 10e-6)
    rng = np.random.default_rng(0)
    obj = PhaseObject(grid, np.exp(1j * rng.uniform(0, 2 * np.pi, 32)))
    freqs = default_freq_axis(grid)
    direct = np.abs(transform_samples(obj, freqs))
    fft = np.abs(np.fft.fftshift(np.fft.fft(obj.transmission))) * grid.pitch
    assert np.allclose(direct, fft, rtol=1e-10, atol=1e-18)


def test_unit_peak_keeps_zero_estimates_zero():
    assert np.array_equal(unit_peak(np.zeros(4)), np.zeros(4))
    assert unit_peak(np.array([0.5, 2.0])).tolist() == [0.25, 1.0]


def test_speckle_field_components_are_gaussian():
    grid = Grid1D(64, 3e-3 / 64)
    source = SourceModel(3e-3, grid, seed=21, wavelength=WAVELENGTH)
    fields = np.concatenate([make_speckle_field(source, k).amplitude for k in range(1000)])
    for part in (fields.real, fields.imag):
        assert abs(stats.skew(part)) < 0.05
        assert stats.kurtosis(part, fisher=False) == pytest.approx(3.0, abs=0.1)
    assert np.mean(fields.real * fields.imag) == pytest.approx(0.0, abs=0.01)


def test_pure_phase_object_conserves_energy(geometry, slits):
    field = _random_field(geometry.object_grid, seed=8)
    assert apply_object(field, slits).energy() == pytest.approx(field.energy(), rel=1e-12)
    scaled = field.scaled(2.0 - 1.0j)
    assert apply_object(scaled, slits).energy() == pytest.approx(5.0 * field.energy(), rel=1e-12)


def test_estimate_positions_follow_lambda_d22():
    estimate = SpectrumEstimate(np.array([-2e3, 0.0, 5e3]), np.array([0.2, 1.0, 0.4]), "test", lambda_d22=1.2e-7)
    assert np.allclose(estimate.positions, [-2.4e-4, 0.0, 6e-4])
    with pytest.raises(ShapeError):
        _ = SpectrumEstimate(np.zeros(2), np.ones(2), "test").positions
