"""
Remote sweep cells on Modal: one container per (K, mode, seed) cell.

The cell function is the same run_cell used locally, so a remote sweep
produces the same table as `sweep --jobs n`.
"""

from __future__ import annotations

from typing import Any, Iterable

from cloud import app, sim_image
from config import REMOTE_CELL_TIMEOUT


@app.function(image=sim_image, timeout=REMOTE_CELL_TIMEOUT)
def run_sweep_cell(cell: dict[str, Any]) -> dict[str, Any]:
    from bench.sweep import run_cell
    return run_cell(cell)


def remote_mapper(cells: list[dict[str, Any]]) -> Iterable[dict[str, Any]]:
    """Fan the cells out over Modal containers; results arrive in input order."""
    with app.run():
        yield from run_sweep_cell.map(cells)
