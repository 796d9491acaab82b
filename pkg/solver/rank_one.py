"""
Rank-one recovery of the packed spectrum for full sensing modes.

Every full-mode row reads y_k = |w_k . T~|^2, with w_k the reference field
times the D1 chirp placed on the row's window of the union axis. The packed
unknown is B = conj(T~) T~^T, so instead of fitting n^2 entries this fits
the n-vector t directly by alternating projections:

    c <- phase(W t)
    t <- argmin ||W t - sqrt(y) c||          (least squares through pinv(W))

started from the leading eigenvector of W^H diag(y) W. Each step cannot
increase 0.5 * || |W t| - sqrt(y) ||^2, which is the recorded objective.
Restarts from seeded random points keep the best fit. The global phase of t
is not observable; B and |T~| are.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy import linalg

from config import RANK_ONE_ACCEPT, RANK_ONE_RESTARTS, RANK_ONE_SPECTRAL_TRIM
from errors import ConfigurationError, ModeError, ShapeError, SolverFailure
from sensing.packing import DiagonalConvention
from solver.lasso import SolveResult, SolverConfig

logger = logging.getLogger(__name__)


def spectral_start(w: np.ndarray, y: np.ndarray, trim: float = RANK_ONE_SPECTRAL_TRIM) -> np.ndarray:
    """Leading eigenvector of sum_k y_k conj(w_k) w_k^T, scaled to fit the mean intensity."""
    w = np.asarray(w, dtype=np.complex128)
    y = np.asarray(y, dtype=np.float64)
    n = w.shape[1]
    mean_y = float(np.mean(y)) if y.size else 0.0
    weights = np.where(y <= trim * mean_y, y, 0.0)
    s = (w.conj().T * weights) @ w / max(len(y), 1)
    _, vecs = linalg.eigh(s, subset_by_index=[n - 1, n - 1])
    z = vecs[:, 0]
    power = np.abs(w @ z) ** 2
    denom = float(power @ power)
    if denom == 0.0:
        return z
    return np.sqrt(max(float(power @ y), 0.0) / denom) * z


def _misfit(wz: np.ndarray, amplitude: np.ndarray) -> float:
    return 0.5 * float(np.sum((np.abs(wz) - amplitude) ** 2))


def alternate(
    w: np.ndarray,
    w_pinv: np.ndarray,
    amplitude: np.ndarray,
    z: np.ndarray,
    max_iters: int,
    tol: float,
) -> tuple[np.ndarray, list[float], int, bool]:
    """Alternating projections from z. Returns (t, objective trace, iterations, converged)."""
    scale = max(float(np.linalg.norm(amplitude)), 1e-300)
    wz = w @ z
    f = _misfit(wz, amplitude)
    trace: list[float] = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        z_new = w_pinv @ (amplitude * np.exp(1j * np.angle(wz)))
        wz_new = w @ z_new
        f_new = _misfit(wz_new, amplitude)
        if not np.isfinite(f_new):
            raise SolverFailure(f"rank-one iterate became non-finite at iteration {it}", trace)
        step = float(np.linalg.norm(z_new - z)) / max(float(np.linalg.norm(z_new)), 1e-300)
        if f_new > f:
            # roundoff at the fixed point
            trace.append(f)
            converged = step <= tol or np.sqrt(2.0 * f) / scale <= tol
            break
        z, wz, f = z_new, wz_new, f_new
        trace.append(f)
        if step <= tol or np.sqrt(2.0 * f) / scale <= tol:
            converged = True
            break
    return z, trace, it, converged


def solve_rank_one(
    system,
    config: SolverConfig,
    restarts: int = RANK_ONE_RESTARTS,
    seed: int = 0,
) -> SolveResult:
    if not system.mode.full:
        raise ModeError("rank-one recovery needs a full sensing mode; diagonal systems have no cross terms")
    if system.vectors is None:
        raise ShapeError(f"{system.mode.name} system carries no measurement vectors")
    if restarts < 1:
        raise ConfigurationError(f"restarts must be >= 1, got {restarts}")
    config.validate()

    w = np.asarray(system.vectors, dtype=np.complex128)
    y = np.asarray(system.y, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != y.shape[0] or w.shape[0] == 0:
        raise ShapeError(f"vectors {w.shape} do not match {y.shape} measurements")
    n = w.shape[1]
    amplitude = np.sqrt(np.maximum(y, 0.0))
    scale = max(float(np.linalg.norm(amplitude)), 1e-300)
    w_pinv = linalg.pinv(w)

    start = spectral_start(w, y)
    start_norm = float(np.linalg.norm(start)) or 1.0
    best = None
    for r in range(restarts):
        if r == 0:
            z0 = start
        else:
            rng = np.random.default_rng([int(seed), r])
            g = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            z0 = start_norm * g / np.linalg.norm(g)
        t, trace, iters, converged = alternate(w, w_pinv, amplitude, z0, config.max_iters, config.tol)
        final = trace[-1] if trace else _misfit(w @ t, amplitude)
        logger.debug("rank-one restart %d: misfit %.3e after %d iterations", r, final, iters)
        if best is None or final < best[0]:
            best = (final, t, trace, iters, converged)
        if np.sqrt(2.0 * final) / scale <= RANK_ONE_ACCEPT:
            break

    final, t, trace, iters, converged = best
    if not converged:
        logger.warning("rank-one solve stopped after %d iterations without meeting tol=%.1e",
                       iters, config.tol)

    packing = system.packing
    x = packing.pack(np.outer(np.conj(t), t))
    if system.mode.convention is DiagonalConvention.PAPER_SQRT:
        x[packing.diagonal_slots()] = np.abs(t)
    residual = float(np.linalg.norm(np.abs(w @ t) ** 2 - y))
    logger.info("rank-one solve: amplitude misfit %.3e, intensity residual %.3e", final, residual)
    return SolveResult(
        x=x,
        objective_trace=trace,
        residual=residual,
        iterations_used=iters,
        converged=converged,
        lambda_reg=0.0,
    )
