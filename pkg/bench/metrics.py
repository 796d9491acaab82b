from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from errors import ShapeError
from optics.objects import SpectrumEstimate, unit_peak

METRIC_NAMES = ("pearson_correlation", "normalized_mse", "peak_position_error")


@dataclass
class ReconComparison:
    gics_result: SpectrumEstimate
    cgi_result: SpectrumEstimate
    oracle: SpectrumEstimate
    metrics: dict[str, dict[str, float]]

    def summary(self) -> str:
        parts = []
        for estimator, values in self.metrics.items():
            parts.append(
                f"{estimator}: r={values['pearson_correlation']:.4f} "
                f"nmse={values['normalized_mse']:.4f} "
                f"peak_err={values['peak_position_error']:.0f}"
            )
        return " | ".join(parts)


def _check_axes(estimate: SpectrumEstimate, oracle: SpectrumEstimate) -> None:
    if estimate.freq_axis.shape != oracle.freq_axis.shape or not np.allclose(
        estimate.freq_axis, oracle.freq_axis, rtol=1e-9, atol=0.0
    ):
        raise ShapeError(
            f"{estimate.provenance} frequency axis ({estimate.freq_axis.size} bins) "
            f"does not match the oracle's ({oracle.freq_axis.size} bins)"
        )


def score(estimate: SpectrumEstimate, oracle: SpectrumEstimate) -> dict[str, float]:
    """Metrics of one estimate against the oracle, after unit-peak normalisation."""
    _check_axes(estimate, oracle)
    e = unit_peak(estimate.magnitude)
    o = unit_peak(oracle.magnitude)

    if np.std(e) == 0 or np.std(o) == 0:
        pearson = 0.0
    else:
        pearson = float(np.clip(np.corrcoef(e, o)[0, 1], -1.0, 1.0))
    denom = float(o @ o)
    nmse = float((e - o) @ (e - o)) / denom if denom > 0 else float("inf")
    peak = float(abs(int(np.argmax(e)) - int(np.argmax(o))))
    return {
        "pearson_correlation": pearson,
        "normalized_mse": nmse,
        "peak_position_error": peak,
    }


def compare(gics: SpectrumEstimate, cgi: SpectrumEstimate, oracle: SpectrumEstimate) -> ReconComparison:
    return ReconComparison(
        gics_result=gics,
        cgi_result=cgi,
        oracle=oracle,
        metrics={"gics": score(gics, oracle), "cgi": score(cgi, oracle)},
    )
