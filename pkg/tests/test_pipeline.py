import json
import os

import numpy as np
import pandas as pd
import pytest

import app
from config import BINARY_MAGIC, METRICS_COLUMNS, SPECTRA_COLUMNS, SWEEP_COLUMNS
from data.generator import preset_data
from errors import ConfigurationError, DataError, FormatError, ShapeError, StageError
from memory.store import get_status, load, load_manifest, poll_events
from pipeline import artifacts
from pipeline.orchestrator import run_pipeline, run_stage, run_sweep
from pipeline.settings import config_reference, load_config, parse_config, preset_path
from sensing.system import SensingMode, build_system
from solver.lasso import SolverConfig, solve_l1


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def test_paper_sim_preset():
    config = load_config("paper-sim")
    assert config.geometry.source_width == pytest.approx(3e-3)
    assert config.geometry.d21 == pytest.approx(0.2)
    assert config.geometry.d22 == pytest.approx(0.2)
    assert config.object.n_slits == 5
    assert config.object.slit_width == pytest.approx(600e-6)
    assert config.acquisition.n_shots == 50
    config.build_geometry()


def test_paper_exp_preset():
    config = load_config("paper-exp")
    assert config.geometry.d22 == pytest.approx(0.05)
    assert config.object.slit_width == pytest.approx(150e-6)
    assert config.acquisition.n_shots == 100
    geometry = config.build_geometry()
    config.build_object(geometry)


@pytest.mark.parametrize("name", ["paper-sim", "paper-exp"])
def test_presets_use_a_central_pixel_block(name):
    config = load_config(name)
    pixels = config.r2_pixels()
    assert pixels[0] == 64
    assert sorted(pixels) == list(range(32, 96))
    assert config.solver.method == "auto"


@pytest.mark.parametrize("name", ["paper-sim", "paper-exp"])
def test_preset_files_are_generator_formatted(name):
    with open(preset_path(name), encoding="utf-8") as f:
        text = f.read()
    assert text == json.dumps(preset_data()[name], indent=2) + "\n"


def test_directory_is_not_a_config(tmp_path):
    with pytest.raises(ConfigurationError, match="neither a file nor a preset"):
        load_config(str(tmp_path))


def test_rank_one_method_refuses_diagonal_mode(small_config_data):
    small_config_data["solver"]["method"] = "rank-one"
    with pytest.raises(ConfigurationError, match="rank-one"):
        parse_config(small_config_data)
    small_config_data["sensing"]["modes"] = ["homodyne"]
    small_config_data["sweep"]["modes"] = ["cgi"]
    assert parse_config(small_config_data).solver.method == "rank-one"


def test_fourier_condition_violation_is_named():
    with pytest.raises(ConfigurationError, match="Fourier condition"):
        parse_config({"geometry": {"d21": 0.2, "d22": 0.2, "d1": 0.5}})


def test_unknown_keys_rejected():
    with pytest.raises(ConfigurationError, match="solver.step_size"):
        parse_config({"solver": {"step_size": 0.1}})


def test_json_errors_carry_line_and_column(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "name": "x",\n  "geometry": {,}\n}\n')
    with pytest.raises(ConfigurationError, match=r"broken\.json:3:"):
        load_config(str(path))


def test_missing_config_rejected():
    with pytest.raises(ConfigurationError):
        load_config("no-such-preset")


def test_overrides_keep_everything_else(small_config_data):
    config = parse_config(small_config_data).with_overrides(seed=9, output_dir="elsewhere")
    assert config.seed == 9
    assert config.output_dir == "elsewhere"
    assert config.object.n_slits == 2


def test_config_reference_documents_defaults():
    reference = config_reference()
    assert "GeometrySettings" in json.dumps(reference)
    assert "output_dir" in reference["properties"]


def test_unknown_mode_rejected(small_config_data):
    small_config_data["sensing"]["modes"] = ["conjecture-flat"]
    with pytest.raises(ConfigurationError):
        parse_config(small_config_data)


# ---------------------------------------------------------------------------
# Artifacts
# ---------------------------------------------------------------------------

def test_shots_round_trip(tmp_path, shots):
    path = str(tmp_path / "shots.gics")
    artifacts.save_shots(path, shots, {"seed": 3})
    loaded, header = artifacts.load_shots(path)
    assert header["seed"] == 3 and header["has_field"]
    assert len(loaded) == len(shots)
    for a, b in zip(shots, loaded):
        assert a.shot_index == b.shot_index
        assert np.array_equal(a.i_r, b.i_r)
        assert np.array_equal(a.i_w, b.i_w)
        assert np.array_equal(a.e_r, b.e_r)


def test_system_round_trip(tmp_path, geometry, shots):
    system = build_system(shots, geometry, SensingMode.parse("conjecture-random", "paper", 12), [8, 9])
    path = str(tmp_path / "system.gics")
    artifacts.save_system(path, system)
    loaded = artifacts.load_system(path)
    assert loaded.mode == system.mode
    assert loaded.r2_pixels == system.r2_pixels
    assert loaded.detector_points == system.detector_points
    for name in ("a_prime", "y", "freq_axis", "row_norms"):
        assert np.array_equal(getattr(loaded, name), getattr(system, name))


def test_vector_system_round_trip(tmp_path, geometry, shots):
    system = build_system(shots, geometry, SensingMode.parse("homodyne", "paper"), [8, 9], lifted=False)
    path = str(tmp_path / "system.gics")
    artifacts.save_system(path, system)
    header, _ = artifacts.read_binary(path, kind="system")
    assert header["lifted"] is False and header["columns"] == 17 * 17
    loaded = artifacts.load_system(path)
    assert loaded.a_prime is None
    for name in ("vectors", "y", "freq_axis", "row_norms"):
        assert np.array_equal(getattr(loaded, name), getattr(system, name))
    x = np.ones(loaded.n_unknowns)
    assert np.array_equal(loaded.predict(x), system.predict(x))


def test_diagonal_system_file_records_n_columns(tmp_path, geometry, shots):
    path = str(tmp_path / "system.gics")
    artifacts.save_system(path, build_system(shots, geometry, SensingMode.parse("diagonal"), [8]))
    header, _ = artifacts.read_binary(path, kind="system")
    assert header["columns"] == 16


def test_solution_round_trip(tmp_path, geometry, shots):
    system = build_system(shots, geometry, SensingMode.parse("diagonal"), [8])
    result = solve_l1(system, SolverConfig(lambda_reg=1e-3, max_iters=50))
    path = str(tmp_path / "solution.gics")
    artifacts.save_solution(path, result, "diagonal")
    loaded, mode = artifacts.load_solution(path)
    assert mode == "diagonal"
    assert np.array_equal(loaded.x, result.x)
    assert loaded.objective_trace == result.objective_trace


def test_truncated_file_is_a_format_error(tmp_path, shots):
    path = tmp_path / "shots.gics"
    artifacts.save_shots(str(path), shots)
    blob = path.read_bytes()
    path.write_bytes(blob[:-9])
    with pytest.raises(FormatError, match="truncated"):
        artifacts.load_shots(str(path))
    path.write_bytes(blob[:10])
    with pytest.raises(FormatError):
        artifacts.load_shots(str(path))


def test_bad_magic_and_version(tmp_path, shots):
    path = tmp_path / "shots.gics"
    artifacts.save_shots(str(path), shots)
    blob = path.read_bytes()
    path.write_bytes(b"NOTGICS!" + blob[8:])
    with pytest.raises(FormatError, match="magic"):
        artifacts.load_shots(str(path))
    path.write_bytes(BINARY_MAGIC + (7).to_bytes(4, "little") + blob[12:])
    with pytest.raises(FormatError, match="version"):
        artifacts.load_shots(str(path))


def test_wrong_kind_rejected(tmp_path, shots):
    path = str(tmp_path / "shots.gics")
    artifacts.save_shots(path, shots)
    with pytest.raises(FormatError):
        artifacts.load_system(path)


def test_loaded_system_checks_detector_size(tmp_path, geometry, shots):
    path = str(tmp_path / "system.gics")
    artifacts.save_system(path, build_system(shots, geometry, SensingMode.parse("diagonal"), [8]))
    with pytest.raises(ShapeError):
        artifacts.load_system(path).check_detector(32)


def test_write_table_refuses_non_finite(tmp_path):
    table = pd.DataFrame({"a": [1.0, np.nan]})
    with pytest.raises(DataError):
        artifacts.write_table(str(tmp_path / "t.csv"), table)
    artifacts.write_table(str(tmp_path / "t.csv"), table, allow_missing=True)
    assert (tmp_path / "t.csv").read_text() == "a\n1.000000000000e+00\nnan\n"
    with pytest.raises(DataError):
        artifacts.write_table(str(tmp_path / "t.csv"), pd.DataFrame({"a": [np.inf]}), allow_missing=True)


def test_svg_has_one_polyline_per_series():
    svg = artifacts.spectrum_svg(np.linspace(-1e3, 1e3, 5), {"oracle": np.ones(5), "gics": np.zeros(5)}, "t")
    assert svg.startswith("<svg")
    assert svg.count("<polyline") == 2


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

def _csv_bytes(run_dir):
    return {name: open(os.path.join(run_dir, name), "rb").read()
            for name in sorted(os.listdir(run_dir)) if name.endswith(".csv")}


def test_run_pipeline_writes_every_artifact(small_config_data):
    config = parse_config(small_config_data)
    assert run_pipeline(config) == 0
    run_dir = config.output_dir

    spectra = pd.read_csv(os.path.join(run_dir, "spectra_homodyne.csv"))
    assert list(spectra.columns) == SPECTRA_COLUMNS
    assert len(spectra) == 16
    metrics = pd.read_csv(os.path.join(run_dir, "metrics.csv"))
    assert list(metrics.columns) == METRICS_COLUMNS
    assert len(metrics) == 4
    for name in ("shots.gics", "system_homodyne.gics", "system_diagonal.gics", "solution_homodyne.gics",
                 "objective_diagonal.csv", "spectrum_homodyne.svg", "spectrum_diagonal.svg", "cgi.csv"):
        assert os.path.exists(os.path.join(run_dir, name)), name

    manifest = load_manifest(run_dir)
    assert manifest["complete"] and not manifest["partial"]
    assert {a["file"] for a in manifest["artifacts"]} >= {"metrics.csv", "shots.gics"}
    assert poll_events(run_dir)[-1]["event"] == "run_complete"
    stored = load(run_dir, "metrics")
    assert [(r["mode"], r["estimator"]) for r in stored] == list(zip(metrics["mode"], metrics["estimator"]))
    assert load(run_dir, "not-stored", 3) == 3


def test_spectra_span_the_union_axis(small_config_data):
    small_config_data["acquisition"]["r2_pixels"] = [8, 7, 9]
    config = parse_config(small_config_data)
    run_pipeline(config)
    for name in ("homodyne", "diagonal"):
        spectra = pd.read_csv(os.path.join(config.output_dir, f"spectra_{name}.csv"))
        assert len(spectra) == 16 + 2
    assert len(pd.read_csv(os.path.join(config.output_dir, "cgi.csv"))) == 18


def test_run_pipeline_is_byte_reproducible(small_config_data, tmp_path):
    first = parse_config(small_config_data)
    second = first.with_overrides(output_dir=str(tmp_path / "again"))
    run_pipeline(first)
    run_pipeline(second)
    assert _csv_bytes(first.output_dir) == _csv_bytes(second.output_dir)


def test_failed_stage_marks_manifest_partial(small_config_data):
    small_config_data["acquisition"]["record_field"] = False
    config = parse_config(small_config_data)
    with pytest.raises(StageError) as info:
        run_pipeline(config)
    assert info.value.stage == "build"
    manifest = load_manifest(config.output_dir)
    assert manifest["partial"] and manifest["failed_stage"] == "build"
    assert [a["file"] for a in manifest["artifacts"]] == ["shots.gics"]


def test_stages_run_one_at_a_time(small_config_data):
    config = parse_config(small_config_data)
    for stage in ("acquire", "build", "solve", "cgi", "compare"):
        assert run_stage(config, stage) == 0
        assert get_status(config.output_dir)["stage"] == stage
    assert load_manifest(config.output_dir)["complete"]
    assert os.path.exists(os.path.join(config.output_dir, "metrics.csv"))


def test_stage_without_inputs_fails_cleanly(small_config_data):
    config = parse_config(small_config_data)
    with pytest.raises(StageError) as info:
        run_stage(config, "solve")
    assert info.value.stage == "solve"
    assert isinstance(info.value.cause, FormatError)


def test_run_sweep_writes_table(small_config_data):
    config = parse_config(small_config_data)
    table = run_sweep(config)
    assert list(table.columns) == SWEEP_COLUMNS
    written = pd.read_csv(os.path.join(config.output_dir, "sweep.csv"))
    assert len(written) == 4


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------

def test_cli_run_and_errors(small_config_data, tmp_path, capsys):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(small_config_data))
    assert app.main(["run", "--config", str(path), "--out", str(tmp_path / "cli"), "--seed", "4"]) == 0
    assert load_manifest(str(tmp_path / "cli"))["seed"] == 4

    small_config_data["geometry"]["d1"] = 1.0
    path.write_text(json.dumps(small_config_data))
    assert app.main(["run", "--config", str(path)]) == 2
    assert "error [config]" in capsys.readouterr().err


def test_cli_reference(capsys):
    assert app.main(["reference"]) == 0
    assert "properties" in json.loads(capsys.readouterr().out)
