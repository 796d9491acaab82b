"""
Generate the bundled presets and the configuration reference.

Run from the repository root after changing a default or a settings model:
  python -m data.generator

Writes data/presets/<name>.json (validated against RunConfig before writing)
and data/config_reference.json (JSON schema with every default).
"""

import copy
import json
import math
import os

from config import MASTER_SEED, PRESETS
from pipeline.settings import config_reference, parse_config


def _central_block(detector_points: int, width: int) -> list[int]:
    """Contiguous test pixels centred on the middle one, middle pixel first."""
    centre = detector_points // 2
    lo = centre - width // 2
    return [centre] + [p for p in range(lo, lo + width) if p != centre]


DATA_DIR = os.path.dirname(os.path.abspath(__file__))
PRESET_DIR = os.path.join(DATA_DIR, "presets")

# 3 mm source, d21 = d22 = 20 cm, five pure-phase slits of 600 um, K = 50.
# 64 aligned test pixels give 64 equations per shot on a 191-bin union axis.
_SIMULATION = {
    "name": "paper-sim",
    "geometry": {
        "wavelength": 632.8e-9,
        "d21": 0.2,
        "d22": 0.2,
        "d1": 0.4,
        "source_width": 3e-3,
        "source_points": 512,
        "object_points": 128,
        "detector_points": 128,
        "reference_path": "relay",
    },
    "object": {
        "n_slits": 5,
        "slit_width": 600e-6,
        "gap": 300e-6,
        "phase_depth": math.pi,
    },
    "acquisition": {
        "n_shots": 50,
        "r2_pixels": _central_block(128, 64),
        "noise_sigma": 0.0,
        "seed": MASTER_SEED,
        "record_field": True,
    },
    "sensing": {
        "modes": ["homodyne", "conjecture-spherical", "diagonal"],
        "diagonal_convention": "exact",
        "conjecture_seed": 7,
        "normalize_rows": True,
    },
    "solver": {
        "lambda_ratios": [0.1, 0.03, 0.01, 0.003, 0.001],
        "max_iters": 2000,
        "tol": 1e-8,
        "nonneg_diagonal": True,
        "debias": False,
        "holdout_fraction": 0.2,
        "method": "auto",
        "restarts": 4,
    },
    "sweep": {
        "k_values": [50, 500],
        "modes": ["homodyne", "conjecture-spherical", "diagonal", "cgi"],
        "n_seeds": 10,
    },
    "output_dir": "runs/paper-sim",
}


def _experiment() -> dict:
    """d22 = 5 cm, slits of 150 um, K = 100; everything else as the simulation."""
    preset = copy.deepcopy(_SIMULATION)
    preset["name"] = "paper-exp"
    preset["geometry"].update({"d22": 0.05, "d1": 0.25})
    preset["object"].update({"slit_width": 150e-6, "gap": 75e-6})
    preset["acquisition"]["n_shots"] = 100
    preset["output_dir"] = "runs/paper-exp"
    return preset


def preset_data() -> dict[str, dict]:
    return {"paper-sim": copy.deepcopy(_SIMULATION), "paper-exp": _experiment()}


def generate_presets(outdir: str) -> None:
    os.makedirs(outdir, exist_ok=True)
    presets = preset_data()
    assert set(presets) == set(PRESETS)
    for name, data in presets.items():
        parse_config(data, source=name)
        outpath = os.path.join(outdir, f"{name}.json")
        with open(outpath, "w", encoding="utf-8", newline="\n") as f:
            json.dump(data, f, indent=2)
            f.write("\n")
        print(f"  Written preset {name} -> {outpath}")


def generate_reference(outpath: str) -> None:
    with open(outpath, "w", encoding="utf-8", newline="\n") as f:
        json.dump(config_reference(), f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"  Written configuration reference -> {outpath}")


if __name__ == "__main__":
    print("Generating presets and configuration reference...")
    generate_presets(PRESET_DIR)
    generate_reference(os.path.join(DATA_DIR, "config_reference.json"))
    print("Done.")
