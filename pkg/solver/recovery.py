"""Choose and run the recovery for a sensing system."""

from __future__ import annotations

from config import HOLDOUT_FRACTION, RANK_ONE_RESTARTS, SOLVER_METHODS
from errors import ConfigurationError, ModeError
from solver.lasso import SolveResult, SolverConfig, solve_with_selection
from solver.rank_one import solve_rank_one


def resolve_method(method: str, full: bool) -> str:
    """'auto' is rank-one for full modes and l1 for diagonal-only ones."""
    if method not in SOLVER_METHODS:
        raise ConfigurationError(f"unknown solver method {method!r}; expected one of {SOLVER_METHODS}")
    if method == "auto":
        return "rank-one" if full else "l1"
    if method == "rank-one" and not full:
        raise ModeError("rank-one recovery needs a full sensing mode")
    return method


def needs_lifted(method: str, full: bool) -> bool:
    return resolve_method(method, full) == "l1"


def solve_system(
    system,
    config: SolverConfig,
    method: str = "auto",
    lambda_ratios: list[float] | None = None,
    seed: int = 0,
    holdout_fraction: float = HOLDOUT_FRACTION,
    restarts: int = RANK_ONE_RESTARTS,
) -> SolveResult:
    if resolve_method(method, system.mode.full) == "rank-one":
        return solve_rank_one(system, config, restarts=restarts, seed=seed)
    return solve_with_selection(system, list(lambda_ratios or [0.0]), config, seed, holdout_fraction)
