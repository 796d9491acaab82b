from __future__ import annotations

import numpy as np

from errors import ShapeError
from optics.objects import SpectrumEstimate, unit_peak
from sensing.packing import DiagonalConvention, HermitianPacking


def extract_spectrum(
    x: np.ndarray,
    packing: HermitianPacking,
    convention: DiagonalConvention,
    freq_axis: np.ndarray,
    provenance: str = "gics",
    lambda_d22: float | None = None,
) -> SpectrumEstimate:
    """|T(f)| from a packed solution (n^2 entries) or a diagonal-only one (n entries)."""
    x = np.asarray(x, dtype=np.float64)
    freq_axis = np.asarray(freq_axis, dtype=np.float64)
    n = packing.n
    if freq_axis.shape != (n,):
        raise ShapeError(f"frequency axis has {freq_axis.shape}, packing expects ({n},)")

    if x.shape == (packing.size,):
        hermitian = packing.unpack(x)
        diag = np.real(np.diag(hermitian)).copy()
    elif x.shape == (n,):
        hermitian = None
        diag = x.copy()
    else:
        raise ShapeError(f"solution has {x.shape} entries; expected {packing.size} or {n}")

    diag = np.maximum(diag, 0.0)
    if DiagonalConvention(convention) is DiagonalConvention.EXACT:
        magnitude = np.sqrt(diag)
    else:
        magnitude = diag

    return SpectrumEstimate(
        freq_axis=freq_axis,
        magnitude=unit_peak(magnitude),
        provenance=provenance,
        hermitian=hermitian,
        lambda_d22=lambda_d22,
    )
