"""
Modal configuration for remote sweeps: App and container image.
Only bench.remote and the CLI's --remote path import this module.
"""

import modal

from config import MODAL_APP_NAME

# ---------------------------------------------------------------------------
# Modal App
# ---------------------------------------------------------------------------
app = modal.App(MODAL_APP_NAME)

# ---------------------------------------------------------------------------
# Container image
# ---------------------------------------------------------------------------

def _add_local_sources(image):
    """Add the toolkit's Python packages and presets to a Modal image."""
    return (
        image
        .add_local_python_source("cloud")
        .add_local_python_source("config")
        .add_local_python_source("errors")
        .add_local_python_source("optics")
        .add_local_python_source("scheme")
        .add_local_python_source("sensing")
        .add_local_python_source("solver")
        .add_local_python_source("bench")
        .add_local_python_source("pipeline")
        .add_local_python_source("memory")
        .add_local_dir("data", remote_path="/data")
    )


sim_image = _add_local_sources(
    modal.Image.debian_slim(python_version="3.12")
    .pip_install(
        "numpy>=1.26",
        "scipy>=1.12",
        "pandas>=2.2",
        "pydantic>=2.6",
    )
)
