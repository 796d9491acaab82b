import numpy as np
import pytest
from scipy import signal

from bench.cgi import cgi_reconstruct
from bench.metrics import compare, score
from bench.sweep import cell_seed, efficiency_sweep, local_mapper, make_cells, run_cell
from config import SWEEP_COLUMNS
from errors import ConfigurationError, ShapeError, StatisticsError
from optics.objects import SpectrumEstimate, spectrum_oracle
from scheme.acquisition import acquire
from sensing.system import union_freq_axis


def _estimate(values, provenance="test"):
    values = np.asarray(values, dtype=float)
    return SpectrumEstimate(np.arange(values.size, dtype=float), values, provenance)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def test_score_of_oracle_against_itself():
    oracle = _estimate([0.1, 0.5, 1.0, 0.3])
    metrics = score(oracle, oracle)
    assert metrics["pearson_correlation"] == pytest.approx(1.0)
    assert metrics["normalized_mse"] == 0.0
    assert metrics["peak_position_error"] == 0.0


def test_score_normalises_to_unit_peak():
    oracle = _estimate([0.1, 0.5, 1.0, 0.3])
    scaled = _estimate([0.2, 1.0, 2.0, 0.6])
    assert score(scaled, oracle)["normalized_mse"] == pytest.approx(0.0, abs=1e-15)


def test_score_of_flat_or_zero_estimate():
    oracle = _estimate([0.1, 0.5, 1.0, 0.3])
    metrics = score(_estimate(np.zeros(4)), oracle)
    assert metrics["pearson_correlation"] == 0.0
    assert metrics["normalized_mse"] == pytest.approx(1.0)


def test_score_peak_position_error():
    oracle = _estimate([0.0, 1.0, 0.2, 0.0])
    shifted = _estimate([0.0, 0.2, 0.0, 1.0])
    assert score(shifted, oracle)["peak_position_error"] == 2.0


def test_score_rejects_mismatched_axes():
    with pytest.raises(ShapeError):
        score(_estimate([1.0, 0.5]), _estimate([1.0, 0.5, 0.2]))


def test_compare_scores_both_estimators():
    oracle = _estimate([0.1, 0.5, 1.0, 0.3])
    comparison = compare(oracle, _estimate([1.0, 0.1, 0.1, 0.1]), oracle)
    assert set(comparison.metrics) == {"gics", "cgi"}
    assert comparison.metrics["gics"]["pearson_correlation"] > comparison.metrics["cgi"]["pearson_correlation"]
    assert "gics: r=1.0000" in comparison.summary()


def test_compare_flags_a_mirrored_estimate():
    oracle = _estimate([0.1, 0.3, 1.0, 0.6, 0.2, 0.0])
    mirrored = _estimate(oracle.magnitude[::-1])
    metrics = compare(mirrored, oracle, oracle).metrics
    assert metrics["gics"]["pearson_correlation"] < 1.0
    assert metrics["gics"]["peak_position_error"] > 0
    assert metrics["cgi"]["pearson_correlation"] == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# Correlation baseline
# ---------------------------------------------------------------------------

def test_cgi_needs_two_shots(geometry, slits):
    with pytest.raises(StatisticsError):
        cgi_reconstruct(acquire(geometry, slits, 1), geometry)


def test_cgi_converges_towards_the_oracle(geometry, slits):
    shots = acquire(geometry, slits, 2000)
    estimate = cgi_reconstruct(shots, geometry, [8])
    oracle = spectrum_oracle(slits, geometry.lambda_d22, freqs=estimate.freq_axis)
    assert estimate.magnitude.max() == pytest.approx(1.0)
    assert score(estimate, oracle)["pearson_correlation"] > 0.7


def test_cgi_multi_pixel_axis(geometry, shots):
    estimate = cgi_reconstruct(shots, geometry, [8, 7, 9])
    assert np.array_equal(estimate.freq_axis, union_freq_axis(geometry, [8, 7, 9]))
    assert np.all(np.isfinite(estimate.magnitude))


def test_cgi_ignores_shot_order_and_duplication(geometry, shots):
    base = cgi_reconstruct(shots, geometry, [8, 9]).magnitude
    order = np.random.default_rng(0).permutation(len(shots))
    permuted = cgi_reconstruct([shots[k] for k in order], geometry, [8, 9]).magnitude
    doubled = cgi_reconstruct(shots + shots, geometry, [8, 9]).magnitude
    assert np.allclose(permuted, base, rtol=1e-10, atol=1e-12)
    assert np.allclose(doubled, base, rtol=1e-10, atol=1e-12)


def test_cgi_peaks_land_on_oracle_peaks(geometry, slits):
    estimate = cgi_reconstruct(acquire(geometry, slits, 5000), geometry, [8])
    oracle = spectrum_oracle(slits, geometry.lambda_d22, freqs=estimate.freq_axis)
    expected, _ = signal.find_peaks(oracle.magnitude, height=0.5)
    found, _ = signal.find_peaks(estimate.magnitude)
    assert expected.size >= 2
    for p in expected:
        assert np.min(np.abs(found - p)) <= 1


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

def test_cell_seed_depends_only_on_master_and_index():
    assert cell_seed(1, 0) == cell_seed(1, 0)
    assert cell_seed(1, 0) != cell_seed(1, 1)
    assert cell_seed(1, 0) != cell_seed(2, 0)


def test_cells_share_seeds_across_k_and_mode(geometry, slits):
    cells = make_cells(geometry, slits, [10, 20], ["diagonal", "cgi"], 2, master_seed=3)
    assert len(cells) == 8
    seeds = {(c["k"], c["mode"], c["seed_index"]): c["seed"] for c in cells}
    assert seeds[(10, "diagonal", 1)] == seeds[(20, "cgi", 1)]
    with pytest.raises(ConfigurationError):
        make_cells(geometry, slits, [20, 10], ["cgi"], 1)


def test_failed_cell_is_recorded(geometry, slits):
    cell = make_cells(geometry, slits, [1], ["cgi"], 1)[0]
    record = run_cell(cell)
    assert record["ok"] is False
    assert "StatisticsError" in record["error"]


def test_sweep_table(geometry, slits):
    table = efficiency_sweep(
        geometry, slits, [1, 10], ["diagonal", "cgi"], 2, master_seed=3,
        r2_pixels=[8], solver={"lambda_ratios": [0.01], "max_iters": 100},
    )
    assert list(table.columns) == SWEEP_COLUMNS
    assert table[["k", "mode"]].values.tolist() == [[1, "diagonal"], [1, "cgi"], [10, "diagonal"], [10, "cgi"]]

    failed = table[(table["k"] == 1) & (table["mode"] == "cgi")].iloc[0]
    assert failed["n_ok"] == 0 and failed["n_failed"] == 2
    assert np.isnan(failed["pearson_mean"])

    ok = table[table["k"] == 10]
    assert (ok["n_ok"] == 2).all()
    assert ok["pearson_mean"].between(-1.0, 1.0).all()


def test_parallel_sweep_matches_serial(geometry, slits):
    kwargs = dict(r2_pixels=[8], solver={"lambda_ratios": [0.01], "max_iters": 50})
    serial = efficiency_sweep(geometry, slits, [5], ["diagonal", "cgi"], 2, 4, **kwargs)
    parallel = efficiency_sweep(geometry, slits, [5], ["diagonal", "cgi"], 2, 4, mapper=local_mapper(2), **kwargs)
    assert serial.equals(parallel)


def test_homodyne_cells_recover_the_spectrum(geometry, slits):
    table = efficiency_sweep(
        geometry, slits, [40], ["homodyne", "diagonal"], 2, master_seed=3,
        r2_pixels=[8, 7, 9, 6, 10, 5, 11, 4], solver={"lambda_ratios": [0.01], "max_iters": 2000},
    ).set_index(["k", "mode"])
    assert (table["n_ok"] == 2).all()
    assert table.loc[(40, "homodyne"), "pearson_mean"] > 0.999
    assert table.loc[(40, "homodyne"), "nmse_mean"] < table.loc[(40, "diagonal"), "nmse_mean"]
