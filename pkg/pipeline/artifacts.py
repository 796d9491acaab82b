"""
Artifact files: self-describing binary arrays, CSV tables and SVG plots.

Binary layout (little endian):

    bytes 0..7    magic b"GICSBIN\\x00"
    bytes 8..11   format version, uint32
    bytes 12..15  header length h, uint32
    next h bytes  UTF-8 JSON header; header["arrays"] lists name, shape, dtype
    payload       the listed arrays back to back, row-major, '<f8' or '<c16'

Loaders check magic, version, header and the exact payload length.
"""

from __future__ import annotations

import json
import os
from typing import Any

import numpy as np
import pandas as pd

from config import (
    BINARY_MAGIC,
    BINARY_VERSION,
    CSV_FLOAT_FORMAT,
    METRICS_COLUMNS,
    SPECTRA_COLUMNS,
)
from errors import DataError, FormatError
from scheme.acquisition import ShotRecord
from sensing.system import SensingMode, SensingSystem
from solver.lasso import SolveResult

_DTYPES = {"<f8": np.dtype("<f8"), "<c16": np.dtype("<c16")}
_PREAMBLE = len(BINARY_MAGIC) + 8


# ---------------------------------------------------------------------------
# Binary container
# ---------------------------------------------------------------------------

def write_binary(path: str, kind: str, header: dict[str, Any], arrays: dict[str, np.ndarray]) -> None:
    specs = []
    payload = []
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        dtype = "<c16" if np.iscomplexobj(arr) else "<f8"
        data = np.ascontiguousarray(arr, dtype=_DTYPES[dtype])
        specs.append({"name": name, "shape": list(data.shape), "dtype": dtype})
        payload.append(data.tobytes(order="C"))

    head = json.dumps({**header, "kind": kind, "arrays": specs}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(BINARY_MAGIC)
        f.write(np.array([BINARY_VERSION, len(head)], dtype="<u4").tobytes())
        f.write(head)
        for chunk in payload:
            f.write(chunk)


def read_binary(path: str, kind: str | None = None) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except FileNotFoundError:
        raise FormatError(f"{path} not found; run the stage that writes it first") from None

    if len(blob) < _PREAMBLE:
        raise FormatError(f"{path}: truncated ({len(blob)} bytes)")
    if blob[: len(BINARY_MAGIC)] != BINARY_MAGIC:
        raise FormatError(f"{path}: not a GICS binary file (bad magic)")
    version, head_len = np.frombuffer(blob[len(BINARY_MAGIC):_PREAMBLE], dtype="<u4")
    if version != BINARY_VERSION:
        raise FormatError(f"{path}: unsupported format version {int(version)} (expected {BINARY_VERSION})")
    if len(blob) < _PREAMBLE + head_len:
        raise FormatError(f"{path}: truncated header")
    try:
        header = json.loads(blob[_PREAMBLE:_PREAMBLE + head_len].decode("utf-8"))
        specs = header["arrays"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed header ({exc})") from None
    if kind is not None and header.get("kind") != kind:
        raise FormatError(f"{path}: holds {header.get('kind')!r}, expected {kind!r}")

    arrays = {}
    offset = _PREAMBLE + int(head_len)
    for spec in specs:
        try:
            dtype = _DTYPES[spec["dtype"]]
            shape = tuple(int(s) for s in spec["shape"])
        except (KeyError, TypeError, ValueError):
            raise FormatError(f"{path}: malformed array entry {spec!r}") from None
        size = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        if offset + size > len(blob):
            raise FormatError(f"{path}: truncated payload in array {spec.get('name')!r}")
        arrays[spec["name"]] = np.frombuffer(blob, dtype=dtype, count=size // dtype.itemsize,
                                             offset=offset).reshape(shape).copy()
        offset += size
    if offset != len(blob):
        raise FormatError(f"{path}: {len(blob) - offset} trailing bytes after payload")
    return header, arrays


# ---------------------------------------------------------------------------
# Shots
# ---------------------------------------------------------------------------

def save_shots(path: str, shots: list[ShotRecord], header: dict[str, Any] | None = None) -> None:
    has_field = all(s.e_r is not None for s in shots)
    arrays = {
        "shot_index": np.array([s.shot_index for s in shots], dtype=np.float64),
        "i_r": np.stack([s.i_r for s in shots]),
        "i_w": np.stack([s.i_w for s in shots]),
    }
    if has_field:
        arrays["e_r"] = np.stack([s.e_r for s in shots])
    meta = {
        "n_shots": len(shots),
        "d1_points": int(arrays["i_r"].shape[1]),
        "d2_points": int(arrays["i_w"].shape[1]),
        "has_field": has_field,
        **(header or {}),
    }
    write_binary(path, "shots", meta, arrays)


def load_shots(path: str) -> tuple[list[ShotRecord], dict[str, Any]]:
    header, arrays = read_binary(path, kind="shots")
    try:
        index, i_r, i_w = arrays["shot_index"], arrays["i_r"], arrays["i_w"]
    except KeyError as exc:
        raise FormatError(f"{path}: missing array {exc}") from None
    e_r = arrays.get("e_r")
    shots = [
        ShotRecord(int(index[k]), i_r[k], i_w[k], None if e_r is None else e_r[k])
        for k in range(len(index))
    ]
    return shots, header


# ---------------------------------------------------------------------------
# Sensing systems and solutions
# ---------------------------------------------------------------------------

def save_system(path: str, system: SensingSystem, header: dict[str, Any] | None = None) -> None:
    arrays = {
        "y": system.y,
        "freq_axis": system.freq_axis,
        "r2_pixels": np.asarray(system.r2_pixels, dtype=np.float64),
    }
    if system.a_prime is not None:
        arrays["a_prime"] = system.a_prime
    if system.vectors is not None:
        arrays["vectors"] = system.vectors
    if system.row_norms is not None:
        arrays["row_norms"] = system.row_norms
    meta = {
        "mode": system.mode.name,
        "diagonal_convention": system.mode.convention.value,
        "conjecture_seed": system.mode.conjecture_seed,
        "detector_points": system.detector_points,
        "rows": system.n_rows,
        "columns": system.n_unknowns,
        "lifted": system.lifted,
        "normalized": system.normalized,
        "meta": system.meta,
        **(header or {}),
    }
    write_binary(path, "system", meta, arrays)


def load_system(path: str) -> SensingSystem:
    header, arrays = read_binary(path, kind="system")
    try:
        mode = SensingMode.parse(header["mode"], header["diagonal_convention"], header["conjecture_seed"])
        system = SensingSystem(
            a_prime=arrays.get("a_prime"),
            y=arrays["y"],
            freq_axis=arrays["freq_axis"],
            mode=mode,
            r2_pixels=[int(p) for p in arrays["r2_pixels"]],
            detector_points=int(header["detector_points"]),
            row_norms=arrays.get("row_norms"),
            meta=header.get("meta", {}),
            vectors=arrays.get("vectors"),
            normalized=bool(header.get("normalized", True)),
        )
    except KeyError as exc:
        raise FormatError(f"{path}: missing field {exc}") from None
    if system.a_prime is None and system.vectors is None:
        raise FormatError(f"{path}: holds neither the packed matrix nor measurement vectors")
    return system


def save_solution(path: str, result: SolveResult, mode: str) -> None:
    header = {
        "mode": mode,
        "lambda": result.lambda_reg,
        "residual": result.residual,
        "iterations": result.iterations_used,
        "converged": result.converged,
    }
    arrays = {"x": result.x, "objective_trace": np.asarray(result.objective_trace, dtype=np.float64)}
    write_binary(path, "solution", header, arrays)


def load_solution(path: str) -> tuple[SolveResult, str]:
    header, arrays = read_binary(path, kind="solution")
    try:
        result = SolveResult(
            x=arrays["x"],
            objective_trace=arrays["objective_trace"].tolist(),
            residual=float(header["residual"]),
            iterations_used=int(header["iterations"]),
            converged=bool(header["converged"]),
            lambda_reg=float(header["lambda"]),
        )
        return result, header["mode"]
    except KeyError as exc:
        raise FormatError(f"{path}: missing field {exc}") from None


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def write_table(path: str, table: pd.DataFrame, columns: list[str] | None = None,
                allow_missing: bool = False) -> None:
    """Write a CSV table. NaN is written as "nan" only when allow_missing is set; inf never."""
    if columns is not None:
        table = table[columns]
    numeric = table.select_dtypes(include=[np.number]).to_numpy(dtype=np.float64)
    bad = ~np.isfinite(numeric)
    if allow_missing:
        bad &= ~np.isnan(numeric)
    if numeric.size and bad.any():
        raise DataError(f"refusing to write non-finite values to {os.path.basename(path)}")
    table.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n", na_rep="nan")


def spectra_table(freq: np.ndarray, oracle: np.ndarray, gics: np.ndarray, cgi: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame(
        {"f": freq, "oracle": oracle, "gics": gics, "cgi": cgi},
        columns=SPECTRA_COLUMNS,
    )


def metrics_table(rows: list[dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame.from_records(rows, columns=METRICS_COLUMNS)


def objective_table(trace: list[float]) -> pd.DataFrame:
    return pd.DataFrame({"iteration": np.arange(1, len(trace) + 1), "objective": trace})


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

_COLOURS = ("#222222", "#d62728", "#1f77b4", "#2ca02c", "#9467bd")


def spectrum_svg(freq: np.ndarray, series: dict[str, np.ndarray], title: str,
                 width: int = 720, height: int = 360) -> str:
    """Overlaid line chart of |T(f)| curves sharing one frequency axis."""
    left, right, top, bottom = 60, 20, 30, 45
    plot_w, plot_h = width - left - right, height - top - bottom
    freq = np.asarray(freq, dtype=np.float64)
    f_lo, f_hi = float(freq.min()), float(freq.max())
    span = f_hi - f_lo or 1.0
    y_hi = max([float(np.max(v)) for v in series.values() if len(v)] + [1.0])

    def sx(f: float) -> float:
        return left + (f - f_lo) / span * plot_w

    def sy(v: float) -> float:
        return top + plot_h - v / y_hi * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle">{title}</text>',
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#999999"/>',
        f'<text x="{left + plot_w / 2:.1f}" y="{height - 8}" text-anchor="middle">f (cycles/mm)</text>',
        f'<text x="{left - 8}" y="{top + 4}" text-anchor="end">{y_hi:.2f}</text>',
        f'<text x="{left - 8}" y="{top + plot_h + 4}" text-anchor="end">0</text>',
        f'<text x="{left}" y="{top + plot_h + 16}" text-anchor="middle">{f_lo * 1e-3:.2f}</text>',
        f'<text x="{left + plot_w}" y="{top + plot_h + 16}" text-anchor="middle">{f_hi * 1e-3:.2f}</text>',
    ]
    for k, (name, values) in enumerate(series.items()):
        colour = _COLOURS[k % len(_COLOURS)]
        points = " ".join(f"{sx(f):.2f},{sy(v):.2f}" for f, v in zip(freq, np.asarray(values, dtype=np.float64)))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{points}"/>')
        out.append(f'<text x="{left + plot_w - 8}" y="{top + 16 + 16 * k}" text-anchor="end" '
                   f'fill="{colour}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path: str, freq: np.ndarray, series: dict[str, np.ndarray], title: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(spectrum_svg(freq, series, title))
