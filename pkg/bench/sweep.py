"""
Efficiency sweep: reconstruction quality against shot count K for each mode.

Every (K, mode, seed_index) cell is an independent job:

    acquire K shots -> build system (or correlate, for "cgi") -> solve -> score

Full modes solve rank-one from the measurement vectors unless the solver
settings ask for l1, which builds the packed matrix.

The source seed of a cell depends only on (master_seed, seed_index), via
SeedSequence([master_seed, seed_index]); K and the mode do not enter it, so
the shots of a smaller K are a prefix of those of a larger K and every mode
sees the same speckle. Failed cells are recorded, never fatal.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Iterable

import numpy as np
import pandas as pd

from bench.cgi import cgi_reconstruct
from bench.metrics import METRIC_NAMES, score
from config import (
    CONJECTURE_SEED,
    HOLDOUT_FRACTION,
    LAMBDA_RATIOS,
    MASTER_SEED,
    RANK_ONE_RESTARTS,
    SOLVER_MAX_ITERS,
    SOLVER_TOL,
    SWEEP_COLUMNS,
)
from errors import ConfigurationError, GICSError
from optics.objects import PhaseObject, spectrum_oracle
from scheme.acquisition import acquire
from scheme.geometry import SchemeGeometry
from sensing.system import SensingMode, build_system, union_freq_axis
from solver.lasso import SolverConfig
from solver.recovery import needs_lifted, solve_system
from solver.spectrum import extract_spectrum

logger = logging.getLogger(__name__)

Mapper = Callable[[list[dict]], Iterable[dict]]


def cell_seed(master_seed: int, seed_index: int) -> int:
    return int(np.random.SeedSequence([int(master_seed), int(seed_index)]).generate_state(1, dtype=np.uint64)[0])


def run_cell(cell: dict[str, Any]) -> dict[str, Any]:
    """Run one sweep cell. Never raises for domain errors; failures come back flagged."""
    k, mode_name, seed_index = cell["k"], cell["mode"], cell["seed_index"]
    out = {"k": k, "mode": mode_name, "seed_index": seed_index, "ok": False}
    start = time.time()
    try:
        geometry: SchemeGeometry = cell["geometry"].with_seed(cell["seed"])
        obj: PhaseObject = cell["object"]
        r2_pixels = cell.get("r2_pixels") or [geometry.d2_grid.n_points // 2]
        oracle = spectrum_oracle(obj, geometry.lambda_d22, freqs=union_freq_axis(geometry, r2_pixels))

        shots = acquire(
            geometry, obj, k,
            record_field=(mode_name == "homodyne"),
            noise_sigma=cell.get("noise_sigma", 0.0),
        )
        if mode_name == "cgi":
            estimate = cgi_reconstruct(shots, geometry, r2_pixels)
        else:
            mode = SensingMode.parse(mode_name, cell.get("convention", "exact"),
                                     cell.get("conjecture_seed", CONJECTURE_SEED))
            solver = cell.get("solver", {})
            method = solver.get("method", "auto")
            system = build_system(shots, geometry, mode, r2_pixels,
                                  normalize_rows=cell.get("normalize_rows", True),
                                  lifted=needs_lifted(method, mode.full))
            config = SolverConfig(
                max_iters=solver.get("max_iters", SOLVER_MAX_ITERS),
                tol=solver.get("tol", SOLVER_TOL),
                nonneg_diagonal=solver.get("nonneg_diagonal", True),
                debias=solver.get("debias", False),
            )
            result = solve_system(
                system,
                config,
                method,
                solver.get("lambda_ratios", LAMBDA_RATIOS),
                seed=cell["seed"],
                holdout_fraction=solver.get("holdout_fraction", HOLDOUT_FRACTION),
                restarts=solver.get("restarts", RANK_ONE_RESTARTS),
            )
            estimate = extract_spectrum(result.x, system.packing, mode.convention, system.freq_axis,
                                        provenance=mode.name, lambda_d22=geometry.lambda_d22)
        out.update(score(estimate, oracle))
        out["ok"] = True
    except GICSError as exc:
        logger.warning("sweep cell K=%d mode=%s seed=%d failed: %s", k, mode_name, seed_index, exc)
        out["error"] = f"{type(exc).__name__}: {exc}"
    out["elapsed_seconds"] = round(time.time() - start, 3)
    return out


def make_cells(
    geometry: SchemeGeometry,
    obj: PhaseObject,
    k_values: list[int],
    modes: list[str],
    n_seeds: int,
    master_seed: int = MASTER_SEED,
    **options: Any,
) -> list[dict[str, Any]]:
    if not k_values or any(k < 1 for k in k_values) or list(k_values) != sorted(k_values):
        raise ConfigurationError("k_values must be positive and ascending")
    if n_seeds < 1:
        raise ConfigurationError("n_seeds must be >= 1")
    cells = []
    for k in k_values:
        for mode in modes:
            for s in range(n_seeds):
                cells.append({
                    "geometry": geometry,
                    "object": obj,
                    "k": int(k),
                    "mode": mode,
                    "seed_index": s,
                    "seed": cell_seed(master_seed, s),
                    **options,
                })
    return cells


def local_mapper(jobs: int = 1) -> Mapper:
    def mapper(cells: list[dict]) -> Iterable[dict]:
        if jobs <= 1:
            return [run_cell(c) for c in cells]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_cell, cells))
    return mapper


def summarize(records: list[dict[str, Any]], k_values: list[int], modes: list[str]) -> pd.DataFrame:
    """Mean and population std of each metric per (K, mode), in input order."""
    frame = pd.DataFrame.from_records(records)
    rows = []
    for k in k_values:
        for mode in modes:
            cell = frame[(frame["k"] == k) & (frame["mode"] == mode)]
            ok = cell[cell["ok"]]
            row = {"k": int(k), "mode": mode, "n_ok": int(len(ok)), "n_failed": int(len(cell) - len(ok))}
            for metric, label in zip(METRIC_NAMES, ("pearson", "nmse", "peak_error")):
                values = ok[metric].to_numpy(dtype=np.float64) if len(ok) else np.array([])
                row[f"{label}_mean"] = float(values.mean()) if values.size else np.nan
                row[f"{label}_std"] = float(values.std()) if values.size else np.nan
            rows.append(row)
    return pd.DataFrame.from_records(rows, columns=SWEEP_COLUMNS)


def efficiency_sweep(
    geometry: SchemeGeometry,
    obj: PhaseObject,
    k_values: list[int],
    modes: list[str],
    n_seeds: int,
    master_seed: int = MASTER_SEED,
    mapper: Mapper | None = None,
    progress: Callable[[int, int], None] | None = None,
    **options: Any,
) -> pd.DataFrame:
    """Sweep table with columns SWEEP_COLUMNS, one row per (K, mode).

    options are forwarded to every cell: r2_pixels, noise_sigma, convention,
    conjecture_seed, normalize_rows, solver (dict of solver settings).
    """
    cells = make_cells(geometry, obj, k_values, modes, n_seeds, master_seed, **options)
    mapper = mapper or local_mapper(1)
    records = []
    for record in mapper(cells):
        records.append(record)
        if progress is not None:
            progress(len(records), len(cells))
    return summarize(records, list(k_values), list(modes))
