"""
Orchestrator: the five pipeline stages and the efficiency sweep.

Stage 1  ->  acquire   K speckle shots                     shots.gics
Stage 2  ->  build     one sensing system per mode         system_<mode>.gics
Stage 3  ->  solve     recovery per mode                   solution_<mode>.gics, objective_<mode>.csv
Stage 4  ->  cgi       correlation baseline                cgi.csv
Stage 5  ->  compare   spectra, metrics and plots          spectra_<mode>.csv, metrics.csv, spectrum_<mode>.svg

Every stage reads what it needs from the run directory, so the CLI can run
them one at a time. All of them report through memory.store.
"""

from __future__ import annotations

import os
import time
from typing import Any, Callable

import numpy as np
import pandas as pd

from bench.cgi import cgi_reconstruct
from bench.metrics import compare
from bench.sweep import efficiency_sweep, local_mapper
from config import (
    CGI_FILE,
    MANIFEST_FILE,
    METRICS_FILE,
    OBJECTIVE_FILE,
    PLOT_FILE,
    SHOTS_FILE,
    SOLUTION_FILE,
    SPECTRA_FILE,
    SWEEP_COLUMNS,
    SWEEP_FILE,
    SYSTEM_FILE,
)
from errors import GICSError, StageError
from memory.store import emit_event, finish, open_run, record_artifact, save, set_status
from optics.objects import SpectrumEstimate, spectrum_oracle
from pipeline import artifacts
from pipeline.settings import RunConfig
from scheme.acquisition import ShotRecord, acquire
from sensing.packing import HermitianPacking
from sensing.system import build_system
from solver.lasso import SolverConfig
from solver.recovery import needs_lifted, resolve_method, solve_system
from solver.spectrum import extract_spectrum

STAGES = ("acquire", "build", "solve", "cgi", "compare")


def _path(config: RunConfig, filename: str) -> str:
    return os.path.join(config.output_dir, filename)


def _write(config: RunConfig, filename: str, kind: str, stage: str, writer: Callable[[str], None]) -> None:
    writer(_path(config, filename))
    record_artifact(config.output_dir, filename, kind, stage)


def _load_shots(config: RunConfig) -> list[ShotRecord]:
    shots, header = artifacts.load_shots(_path(config, SHOTS_FILE))
    if header.get("seed") != config.seed:
        print(f"   ⚠️  shots were acquired with seed {header.get('seed')}, config says {config.seed}")
    return shots


# ═══════════════════════════════════════════════════════════════════════════
# Stages
# ═══════════════════════════════════════════════════════════════════════════

def stage_acquire(config: RunConfig) -> list[ShotRecord]:
    geometry = config.build_geometry()
    obj = config.build_object(geometry)
    acq = config.acquisition
    set_status(config.output_dir, "acquire", 0.0, f"Simulating {acq.n_shots} shots...")

    shots = acquire(geometry, obj, acq.n_shots, record_field=acq.record_field, noise_sigma=acq.noise_sigma)
    header = {"seed": config.seed, "run": config.name, "noise_sigma": acq.noise_sigma}
    _write(config, SHOTS_FILE, "shots", "acquire", lambda p: artifacts.save_shots(p, shots, header))

    mean_r = float(np.mean([s.i_r.mean() for s in shots]))
    print(f"   ✅ {len(shots)} shots, <I_r> = {mean_r:.4g}, reference field recorded: {acq.record_field}")
    set_status(config.output_dir, "acquire", 1.0, "Shots ready")
    return shots


def stage_build(config: RunConfig, shots: list[ShotRecord] | None = None) -> dict[str, Any]:
    shots = shots if shots is not None else _load_shots(config)
    geometry = config.build_geometry()
    r2_pixels = config.r2_pixels()
    systems = {}
    for k, name in enumerate(config.sensing.modes):
        set_status(config.output_dir, "build", k / len(config.sensing.modes), f"Building {name} system...")
        mode = config.sensing.mode(name)
        system = build_system(shots, geometry, mode, r2_pixels, normalize_rows=config.sensing.normalize_rows,
                              lifted=needs_lifted(config.solver.method, mode.full))
        header = {"seed": config.seed, "run": config.name}
        _write(config, SYSTEM_FILE.format(mode=name), "system", "build",
               lambda p: artifacts.save_system(p, system, header))
        print(f"   ✅ {name}: {system.n_rows} equations x {system.n_unknowns} unknowns"
              f"{'' if system.lifted else ' (vectors only)'}")
        systems[name] = system
    set_status(config.output_dir, "build", 1.0, "Sensing systems ready")
    return systems


def stage_solve(config: RunConfig, systems: dict[str, Any] | None = None) -> dict[str, Any]:
    geometry = config.build_geometry()
    s = config.solver
    solver_config = SolverConfig(
        max_iters=s.max_iters, tol=s.tol, nonneg_diagonal=s.nonneg_diagonal, debias=s.debias,
    )
    results = {}
    for k, name in enumerate(config.sensing.modes):
        set_status(config.output_dir, "solve", k / len(config.sensing.modes), f"Solving {name}...")
        if systems is not None:
            system = systems[name]
        else:
            system = artifacts.load_system(_path(config, SYSTEM_FILE.format(mode=name)))
        system.check_detector(geometry.d1_grid.n_points)

        started = time.time()
        method = resolve_method(s.method, system.mode.full)
        result = solve_system(system, solver_config, method, s.lambda_ratios, seed=config.seed,
                              holdout_fraction=s.holdout_fraction, restarts=s.restarts)
        _write(config, SOLUTION_FILE.format(mode=name), "solution", "solve",
               lambda p: artifacts.save_solution(p, result, name))
        _write(config, OBJECTIVE_FILE.format(mode=name), "table", "solve",
               lambda p: artifacts.write_table(p, artifacts.objective_table(result.objective_trace)))

        state = "converged" if result.converged else "stopped"
        print(f"   ✅ {name} [{method}]: lambda={result.lambda_reg:.3g}, {result.iterations_used} iterations ({state}), "
              f"{time.time() - started:.1f}s")
        emit_event(config.output_dir, {
            "event": "solved", "mode": name, "method": method, "lambda": result.lambda_reg,
            "iterations": result.iterations_used, "converged": result.converged,
        })
        results[name] = result
    set_status(config.output_dir, "solve", 1.0, "All modes solved")
    return results


def stage_cgi(config: RunConfig, shots: list[ShotRecord] | None = None) -> SpectrumEstimate:
    shots = shots if shots is not None else _load_shots(config)
    geometry = config.build_geometry()
    set_status(config.output_dir, "cgi", 0.0, "Correlating intensity fluctuations...")
    estimate = cgi_reconstruct(shots, geometry, config.r2_pixels())
    table = pd.DataFrame({"f": estimate.freq_axis, "cgi": estimate.magnitude})
    _write(config, CGI_FILE, "table", "cgi", lambda p: artifacts.write_table(p, table))
    print(f"   ✅ CGI estimate over {len(shots)} shots, {estimate.freq_axis.size} frequency bins")
    set_status(config.output_dir, "cgi", 1.0, "Correlation baseline ready")
    return estimate


def stage_compare(
    config: RunConfig,
    results: dict[str, Any] | None = None,
    cgi: SpectrumEstimate | None = None,
) -> list[dict[str, Any]]:
    geometry = config.build_geometry()
    obj = config.build_object(geometry)
    cgi = cgi if cgi is not None else cgi_reconstruct(_load_shots(config), geometry, config.r2_pixels())
    oracle = spectrum_oracle(obj, geometry.lambda_d22, freqs=cgi.freq_axis)
    set_status(config.output_dir, "compare", 0.0, "Scoring against the spectrum oracle...")

    rows = []
    for name in config.sensing.modes:
        mode = config.sensing.mode(name)
        if results is not None:
            x = results[name].x
        else:
            result, _ = artifacts.load_solution(_path(config, SOLUTION_FILE.format(mode=name)))
            x = result.x
        gics = extract_spectrum(x, HermitianPacking(oracle.freq_axis.size), mode.convention,
                                oracle.freq_axis, provenance=name, lambda_d22=geometry.lambda_d22)
        comparison = compare(gics, cgi, oracle)

        spectra = artifacts.spectra_table(oracle.freq_axis, oracle.magnitude, gics.magnitude, cgi.magnitude)
        _write(config, SPECTRA_FILE.format(mode=name), "table", "compare",
               lambda p: artifacts.write_table(p, spectra))
        series = {"oracle": oracle.magnitude, name: gics.magnitude, "cgi": cgi.magnitude}
        _write(config, PLOT_FILE.format(mode=name), "plot", "compare",
               lambda p: artifacts.write_svg(p, oracle.freq_axis, series, f"|T(f)|: {name} vs CGI"))

        for estimator, values in comparison.metrics.items():
            rows.append({"mode": name, "estimator": estimator, **values})
        print(f"   ✅ {name}: {comparison.summary()}")

    _write(config, METRICS_FILE, "table", "compare",
           lambda p: artifacts.write_table(p, artifacts.metrics_table(rows)))
    save(config.output_dir, "metrics", rows)
    set_status(config.output_dir, "compare", 1.0, "Metrics written")
    return rows


# ═══════════════════════════════════════════════════════════════════════════
# Drivers
# ═══════════════════════════════════════════════════════════════════════════

def _banner(k: int, total: int, stage: str) -> None:
    print(f"\n🔬  STAGE {k} / {total} — {stage}")


def _run_stage(config: RunConfig, stage: str, fn: Callable, *args: Any) -> Any:
    try:
        return fn(config, *args)
    except GICSError as exc:
        raise StageError(stage, exc) from exc


def run_stage(config: RunConfig, stage: str) -> int:
    """Run a single stage against an existing run directory (CLI subcommands)."""
    fns = {
        "acquire": stage_acquire, "build": stage_build, "solve": stage_solve,
        "cgi": stage_cgi, "compare": stage_compare,
    }
    if stage == "acquire" or not os.path.exists(_path(config, MANIFEST_FILE)):
        open_run(config.output_dir, config.name, config.seed, command=stage)
    _banner(STAGES.index(stage) + 1, len(STAGES), stage)
    try:
        _run_stage(config, stage, fns[stage])
    except StageError as exc:
        finish(config.output_dir, failed_stage=exc.stage, message=str(exc.cause))
        raise
    if stage == STAGES[-1]:
        finish(config.output_dir)
    return 0


def run_pipeline(config: RunConfig) -> int:
    """
    acquire -> build -> solve -> cgi -> compare, all artifacts in config.output_dir.

    A failing stage leaves its predecessors' artifacts in place, marks the
    manifest partial and re-raises as StageError carrying the stage name.
    """
    run_dir = config.output_dir
    open_run(run_dir, config.name, config.seed, command="run")
    save(run_dir, "config", config.model_dump())
    emit_event(run_dir, {"event": "pipeline_started", "run": config.name, "seed": config.seed})
    started = time.time()

    try:
        _banner(1, 5, "acquire: simulating speckle shots")
        shots = _run_stage(config, "acquire", stage_acquire)
        _banner(2, 5, "build: assembling sensing systems")
        systems = _run_stage(config, "build", stage_build, shots)
        _banner(3, 5, "solve: l1 recovery")
        results = _run_stage(config, "solve", stage_solve, systems)
        _banner(4, 5, "cgi: correlation baseline")
        cgi = _run_stage(config, "cgi", stage_cgi, shots)
        _banner(5, 5, "compare: spectra, metrics, plots")
        rows = _run_stage(config, "compare", stage_compare, results, cgi)
    except StageError as exc:
        finish(run_dir, failed_stage=exc.stage, message=str(exc.cause))
        raise

    finish(run_dir)
    elapsed = time.time() - started
    summary = "  ".join(
        f"{r['mode']}/{r['estimator']}: r={r['pearson_correlation']:.3f} nmse={r['normalized_mse']:.3f}"
        for r in rows
    )
    print(f"\n{config.name} ({elapsed:.1f}s)  {summary}")
    return 0


def run_sweep(config: RunConfig, jobs: int = 1, remote: bool = False) -> pd.DataFrame:
    """Efficiency sweep over config.sweep, written to sweep.csv."""
    run_dir = config.output_dir
    if not os.path.exists(_path(config, MANIFEST_FILE)):
        open_run(run_dir, config.name, config.seed, command="sweep")
    geometry = config.build_geometry()
    obj = config.build_object(geometry)
    sw = config.sweep

    if remote:
        from bench.remote import remote_mapper
        mapper = remote_mapper
    else:
        mapper = local_mapper(jobs)

    def progress(done: int, total: int) -> None:
        set_status(run_dir, "sweep", done / total, f"{done}/{total} cells")

    print(f"\n📊  SWEEP — K={sw.k_values}, modes={sw.modes}, {sw.n_seeds} seeds "
          f"({'modal' if remote else f'{jobs} local job(s)'})")
    try:
        table = efficiency_sweep(
            geometry, obj, sw.k_values, sw.modes, sw.n_seeds, config.seed,
            mapper=mapper,
            progress=progress,
            r2_pixels=config.r2_pixels(),
            noise_sigma=config.acquisition.noise_sigma,
            convention=config.sensing.diagonal_convention,
            conjecture_seed=config.sensing.conjecture_seed,
            normalize_rows=config.sensing.normalize_rows,
            solver=config.solver.model_dump(),
        )
        _write(config, SWEEP_FILE, "table", "sweep",
               lambda p: artifacts.write_table(p, table, SWEEP_COLUMNS, allow_missing=True))
    except GICSError as exc:
        finish(run_dir, failed_stage="sweep", message=str(exc))
        raise StageError("sweep", exc) from exc

    failed = int(table["n_failed"].sum())
    if failed:
        print(f"   ⚠️  {failed} sweep cell(s) failed; see events and logs")
    finish(run_dir)
    return table
