"""
l1-regularised least squares for the packed spectrum:

    minimise 0.5 * ||A' x - y||^2 + lam * ||x||_1

Monotone FISTA with backtracking on the Lipschitz estimate. The objective
recorded per iteration never increases. Diagonal slots may be projected onto
x >= 0 (they hold |T|^2 or |T|), and an optional least-squares refit on the
recovered support removes the shrinkage bias.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy import linalg

from config import (
    DEBIAS_SUPPORT_REL,
    HOLDOUT_FRACTION,
    SOLVER_BACKTRACK,
    SOLVER_L0,
    SOLVER_MAX_ITERS,
    SOLVER_MAX_LIPSCHITZ,
    SOLVER_TOL,
)
from errors import ConfigurationError, ShapeError, SolverFailure

logger = logging.getLogger(__name__)


@dataclass
class SolverConfig:
    lambda_reg: float = 0.0
    max_iters: int = SOLVER_MAX_ITERS
    tol: float = SOLVER_TOL
    nonneg_diagonal: bool = False
    debias: bool = False
    # columns are the sparsity atoms: x = basis @ z, with the l1 penalty on z
    basis: np.ndarray | None = None

    def validate(self) -> None:
        if self.max_iters < 1:
            raise ConfigurationError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.tol > 0:
            raise ConfigurationError(f"tol must be > 0, got {self.tol}")
        if self.lambda_reg < 0 or not np.isfinite(self.lambda_reg):
            raise ConfigurationError(f"lambda_reg must be finite and >= 0, got {self.lambda_reg}")


@dataclass
class SolveResult:
    x: np.ndarray
    objective_trace: list[float]
    residual: float
    iterations_used: int
    converged: bool
    lambda_reg: float = 0.0
    support: np.ndarray | None = field(default=None, repr=False)


def soft_threshold(v: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def _nonneg_slots(system, config: SolverConfig) -> np.ndarray | None:
    if not config.nonneg_diagonal:
        return None
    if config.basis is not None:
        logger.warning("nonneg_diagonal ignored: a sparsity basis is set")
        return None
    n_cols = system.require_lifted().shape[1]
    if system.mode.full:
        slots = system.packing.diagonal_slots()
    else:
        slots = np.arange(n_cols)
    mask = np.zeros(n_cols, dtype=bool)
    mask[slots] = True
    return mask


def lambda_max(a: np.ndarray, y: np.ndarray) -> float:
    """Smallest lam for which x = 0 is optimal."""
    return float(np.max(np.abs(a.T @ y))) if a.size else 0.0


def fista(
    a: np.ndarray,
    y: np.ndarray,
    lam: float,
    config: SolverConfig,
    nonneg: np.ndarray | None = None,
    x0: np.ndarray | None = None,
) -> SolveResult:
    """Core monotone FISTA on a dense matrix."""
    n = a.shape[1]
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)

    def prox(v: np.ndarray, step: float) -> np.ndarray:
        out = soft_threshold(v, lam * step)
        if nonneg is not None:
            out[nonneg] = np.maximum(out[nonneg], 0.0)
        return out

    def objective(v: np.ndarray, smooth: float) -> float:
        return smooth + lam * float(np.sum(np.abs(v)))

    r = a @ x - y
    f_x = objective(x, 0.5 * float(r @ r))
    trace: list[float] = []
    yk = x.copy()
    t = 1.0
    lip = SOLVER_L0
    converged = False
    it = 0

    for it in range(1, config.max_iters + 1):
        r_y = a @ yk - y
        f_y = 0.5 * float(r_y @ r_y)
        grad = a.T @ r_y

        while True:
            z = prox(yk - grad / lip, 1.0 / lip)
            d = z - yk
            r_z = a @ z - y
            f_z = 0.5 * float(r_z @ r_z)
            bound = f_y + float(grad @ d) + 0.5 * lip * float(d @ d)
            if f_z <= bound + 1e-15 * max(abs(f_y), 1.0):
                break
            lip *= SOLVER_BACKTRACK
            if lip > SOLVER_MAX_LIPSCHITZ:
                raise SolverFailure("step size collapsed during backtracking", trace)

        f_z_total = objective(z, f_z)
        if not np.isfinite(f_z_total) or not np.all(np.isfinite(z)):
            raise SolverFailure(f"non-finite iterate at iteration {it}", trace)

        x_prev = x
        if f_z_total <= f_x:
            x, f_x = z, f_z_total
        trace.append(f_x)

        t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
        yk = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev)
        t = t_next

        if np.linalg.norm(d) <= config.tol * max(float(np.linalg.norm(z)), 1e-300):
            converged = True
            break

    r = a @ x - y
    return SolveResult(
        x=x,
        objective_trace=trace,
        residual=float(np.linalg.norm(r)),
        iterations_used=it,
        converged=converged,
        lambda_reg=lam,
    )


def _debias(a: np.ndarray, y: np.ndarray, z: np.ndarray, nonneg: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    peak = float(np.max(np.abs(z))) if z.size else 0.0
    if peak == 0.0:
        return z, np.zeros(z.shape, dtype=bool)
    support = np.abs(z) > DEBIAS_SUPPORT_REL * peak
    if support.sum() > a.shape[0]:
        keep = np.argsort(-np.abs(z), kind="stable")[: a.shape[0]]
        support = np.zeros_like(support)
        support[keep] = True
    coef, *_ = linalg.lstsq(a[:, support], y)
    refit = np.zeros_like(z)
    refit[support] = coef
    if nonneg is not None:
        refit[nonneg] = np.maximum(refit[nonneg], 0.0)
    return refit, support


def solve_l1(system, config: SolverConfig, x0: np.ndarray | None = None) -> SolveResult:
    config.validate()
    a = np.asarray(system.require_lifted(), dtype=np.float64)
    y = np.asarray(system.y, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
        raise ShapeError(f"sensing matrix is empty or not 2-D: {a.shape}")
    if y.shape != (a.shape[0],):
        raise ShapeError(f"y has {y.shape}, expected ({a.shape[0]},)")

    basis = config.basis
    a_eff = a if basis is None else a @ basis
    nonneg = _nonneg_slots(system, config)

    result = fista(a_eff, y, config.lambda_reg, config, nonneg=nonneg, x0=x0)
    if not result.converged:
        logger.warning(
            "l1 solve stopped after %d iterations without meeting tol=%.1e (lambda=%.3g)",
            result.iterations_used, config.tol, config.lambda_reg,
        )

    z = result.x
    if config.debias:
        z, result.support = _debias(a_eff, y, z, nonneg)
    x = z if basis is None else basis @ z
    result.x = x
    result.residual = float(np.linalg.norm(a @ x - y))
    return result


def _split_rows(n_rows: int, seed: int, holdout_fraction: float) -> tuple[np.ndarray, np.ndarray]:
    order = np.random.default_rng([int(seed)]).permutation(n_rows)
    if n_rows < 2:
        logger.warning("only %d row(s): held-out residual uses the training rows", n_rows)
        return order, order
    n_hold = min(max(1, int(round(holdout_fraction * n_rows))), n_rows - 1)
    return np.sort(order[n_hold:]), np.sort(order[:n_hold])


def _check_grid(grid: list[float]) -> list[float]:
    grid = [float(g) for g in grid]
    if not grid:
        raise ConfigurationError("lambda grid is empty")
    if any(not (g > 0 and np.isfinite(g)) for g in grid):
        raise ConfigurationError("lambda grid must be positive")
    ascending = all(a <= b for a, b in zip(grid, grid[1:]))
    descending = all(a >= b for a, b in zip(grid, grid[1:]))
    if not (ascending or descending):
        raise ConfigurationError("lambda grid must be sorted")
    return grid


def lambda_path(
    system,
    grid: list[float],
    config: SolverConfig | None = None,
    seed: int = 0,
    holdout_fraction: float = HOLDOUT_FRACTION,
) -> pd.DataFrame:
    """Warm-started solves from large to small lambda on 80% of the rows.

    Rows are split by a permutation drawn from default_rng([seed]); the
    held-out residual is ||A'_h x - y_h|| on the remaining rows.
    """
    grid = sorted(_check_grid(grid), reverse=True)
    config = config or SolverConfig()
    train, hold = _split_rows(len(system.y), seed, holdout_fraction)

    a = np.asarray(system.require_lifted(), dtype=np.float64)
    y = np.asarray(system.y, dtype=np.float64)
    basis = config.basis
    a_eff = a if basis is None else a @ basis
    nonneg = _nonneg_slots(system, config)

    records = []
    x_warm = None
    last_failure: SolverFailure | None = None
    for lam in grid:
        step = SolverConfig(lam, config.max_iters, config.tol, config.nonneg_diagonal, False, basis)
        try:
            res = fista(a_eff[train], y[train], lam, step, nonneg=nonneg, x0=x_warm)
        except SolverFailure as exc:
            logger.warning("lambda=%.3g failed: %s", lam, exc)
            last_failure = exc
            records.append({"lambda": lam, "heldout_residual": np.nan, "train_residual": np.nan,
                            "nnz": 0, "iterations": len(exc.objective_trace), "converged": False})
            continue
        x_warm = res.x
        records.append({
            "lambda": lam,
            "heldout_residual": float(np.linalg.norm(a_eff[hold] @ res.x - y[hold])),
            "train_residual": res.residual,
            "nnz": int(np.count_nonzero(res.x)),
            "iterations": res.iterations_used,
            "converged": res.converged,
        })

    path = pd.DataFrame.from_records(records)
    if path["heldout_residual"].isna().all():
        raise last_failure or SolverFailure("every lambda on the grid failed")
    return path


def select_lambda(
    system,
    grid: list[float],
    config: SolverConfig | None = None,
    seed: int = 0,
    holdout_fraction: float = HOLDOUT_FRACTION,
) -> float:
    path = lambda_path(system, grid, config, seed, holdout_fraction)
    best = path.loc[path["heldout_residual"].idxmin()]
    logger.info("selected lambda=%.4g (held-out residual %.4g)", best["lambda"], best["heldout_residual"])
    return float(best["lambda"])


def solve_with_selection(
    system,
    lambda_ratios: list[float],
    config: SolverConfig,
    seed: int = 0,
    holdout_fraction: float = HOLDOUT_FRACTION,
) -> SolveResult:
    """Scale the ratio grid by lambda_max, pick lambda on held-out rows, solve on all rows."""
    a = np.asarray(system.require_lifted(), dtype=np.float64)
    a_eff = a if config.basis is None else a @ config.basis
    lam_max = lambda_max(a_eff, np.asarray(system.y, dtype=np.float64))
    if lam_max == 0.0:
        lam = 0.0
    elif len(lambda_ratios) == 1:
        lam = lambda_ratios[0] * lam_max
    else:
        grid = sorted(r * lam_max for r in lambda_ratios)
        lam = select_lambda(system, grid, config, seed, holdout_fraction)
    return solve_l1(system, replace(config, lambda_reg=lam))
