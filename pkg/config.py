"""
Shared configuration: physical defaults, numerical constants, artifact names.
All packages import from here. Modal objects live in cloud.py so that the
numerical core imports without a Modal client.
"""

import math

# ---------------------------------------------------------------------------
# Physical defaults (simulation geometry)
# ---------------------------------------------------------------------------
WAVELENGTH = 632.8e-9          # He-Ne line, m
SOURCE_WIDTH = 3e-3            # full aperture of the pseudo-thermal source, m
D21 = 0.20                     # source -> object, m
D22 = 0.20                     # object -> test detector, m
MEAN_INTENSITY = 1.0

SOURCE_POINTS = 512
OBJECT_POINTS = 128
DETECTOR_POINTS = 128

# Five-slit pure-phase object
N_SLITS = 5
SLIT_WIDTH = 600e-6
PHASE_DEPTH = math.pi

# ---------------------------------------------------------------------------
# Numerical tolerances
# ---------------------------------------------------------------------------
FOURIER_CONDITION_TOL = 1e-12   # |d1 - (d21 + d22)|, m
SAMPLING_REL_TOL = 1e-9
HERMITIAN_TOL = 1e-10
PURE_PHASE_TOL = 1e-12
ALIGNMENT_TOL = 1e-9

# ---------------------------------------------------------------------------
# Solver defaults
# ---------------------------------------------------------------------------
SOLVER_MAX_ITERS = 2000
SOLVER_TOL = 1e-8
SOLVER_L0 = 1.0                 # initial Lipschitz estimate for backtracking
SOLVER_BACKTRACK = 2.0
SOLVER_MAX_LIPSCHITZ = 1e30
DEBIAS_SUPPORT_REL = 1e-4       # support threshold relative to max |x|
LAMBDA_RATIOS = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
HOLDOUT_FRACTION = 0.2

# Rank-one recovery of full modes
SOLVER_METHODS = ("auto", "l1", "rank-one")
RANK_ONE_RESTARTS = 4
RANK_ONE_SPECTRAL_TRIM = 9.0    # rows with y above this multiple of mean(y) are left out of the start
RANK_ONE_ACCEPT = 1e-6          # relative amplitude misfit that ends the restarts early

# ---------------------------------------------------------------------------
# Acquisition / sweep defaults
# ---------------------------------------------------------------------------
N_SHOTS = 50
MASTER_SEED = 20100713
CONJECTURE_SEED = 7
SWEEP_K_VALUES = [50, 500, 5000]
SWEEP_N_SEEDS = 10
SWEEP_MODES = ["homodyne", "conjecture-spherical", "diagonal", "cgi"]

# ---------------------------------------------------------------------------
# Artifact names and formats
# ---------------------------------------------------------------------------
BINARY_MAGIC = b"GICSBIN\x00"
BINARY_VERSION = 1
CSV_FLOAT_FORMAT = "%.12e"

SHOTS_FILE = "shots.gics"
SYSTEM_FILE = "system_{mode}.gics"
SOLUTION_FILE = "solution_{mode}.gics"
SPECTRA_FILE = "spectra_{mode}.csv"
OBJECTIVE_FILE = "objective_{mode}.csv"
PLOT_FILE = "spectrum_{mode}.svg"
CGI_FILE = "cgi.csv"
METRICS_FILE = "metrics.csv"
SWEEP_FILE = "sweep.csv"
MANIFEST_FILE = "manifest.json"
EVENTS_FILE = "events.jsonl"

SPECTRA_COLUMNS = ["f", "oracle", "gics", "cgi"]
METRICS_COLUMNS = ["mode", "estimator", "pearson_correlation", "normalized_mse", "peak_position_error"]
SWEEP_COLUMNS = [
    "k", "mode", "n_ok", "n_failed",
    "pearson_mean", "pearson_std",
    "nmse_mean", "nmse_std",
    "peak_error_mean", "peak_error_std",
]

PRESETS = ("paper-sim", "paper-exp")

# ---------------------------------------------------------------------------
# Remote execution (Modal)
# ---------------------------------------------------------------------------
MODAL_APP_NAME = "gics-bench"
REMOTE_CELL_TIMEOUT = 600
