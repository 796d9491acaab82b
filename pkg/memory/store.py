"""
Run journal: status, events and the artifact manifest of one output directory.

manifest.json holds the current status, every artifact written so far and
whether the run completed; events.jsonl gets one timestamped JSON object per
pipeline event. A run that fails keeps its manifest with "partial": true and
the name of the failing stage.
"""

from __future__ import annotations

import json
import os
import time
from typing import Any

from config import EVENTS_FILE, MANIFEST_FILE


def _manifest_path(run_dir: str) -> str:
    return os.path.join(run_dir, MANIFEST_FILE)


def _events_path(run_dir: str) -> str:
    return os.path.join(run_dir, EVENTS_FILE)


def _write_manifest(run_dir: str, manifest: dict[str, Any]) -> None:
    tmp = _manifest_path(run_dir) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    os.replace(tmp, _manifest_path(run_dir))


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

def open_run(run_dir: str, run_name: str, seed: int | None = None, command: str = "run") -> dict[str, Any]:
    """Start (or restart) the journal of a run directory."""
    os.makedirs(run_dir, exist_ok=True)
    manifest = {
        "run": run_name,
        "command": command,
        "seed": seed,
        "started": time.time(),
        "status": {"stage": "idle", "progress": 0.0, "message": "Not started"},
        "artifacts": [],
        "complete": False,
        "partial": False,
        "failed_stage": None,
        "state": {},
    }
    _write_manifest(run_dir, manifest)
    with open(_events_path(run_dir), "w", encoding="utf-8"):
        pass
    return manifest


def load_manifest(run_dir: str) -> dict[str, Any]:
    try:
        with open(_manifest_path(run_dir), "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        return open_run(run_dir, os.path.basename(os.path.normpath(run_dir)))


def save(run_dir: str, key: str, value: Any) -> None:
    """Store a JSON-serialisable value in the manifest's state block."""
    manifest = load_manifest(run_dir)
    manifest["state"][key] = value
    _write_manifest(run_dir, manifest)


def load(run_dir: str, key: str, default: Any = None) -> Any:
    return load_manifest(run_dir).get("state", {}).get(key, default)


def record_artifact(run_dir: str, filename: str, kind: str, stage: str) -> None:
    manifest = load_manifest(run_dir)
    manifest["artifacts"] = [a for a in manifest["artifacts"] if a["file"] != filename]
    manifest["artifacts"].append({"file": filename, "kind": kind, "stage": stage})
    _write_manifest(run_dir, manifest)
    emit_event(run_dir, {"event": "artifact_written", "file": filename, "kind": kind, "stage": stage})


def finish(run_dir: str, failed_stage: str | None = None, message: str = "") -> dict[str, Any]:
    manifest = load_manifest(run_dir)
    manifest["finished"] = time.time()
    manifest["complete"] = failed_stage is None
    manifest["partial"] = failed_stage is not None
    manifest["failed_stage"] = failed_stage
    if failed_stage is not None:
        manifest["error"] = message
    _write_manifest(run_dir, manifest)
    emit_event(run_dir, {
        "event": "run_failed" if failed_stage else "run_complete",
        "failed_stage": failed_stage,
        "message": message,
    })
    return manifest


# ---------------------------------------------------------------------------
# Events and status
# ---------------------------------------------------------------------------

def emit_event(run_dir: str, event: dict) -> None:
    event = {**event, "timestamp": time.time()}
    with open(_events_path(run_dir), "a", encoding="utf-8") as f:
        f.write(json.dumps(event, sort_keys=True) + "\n")


def poll_events(run_dir: str) -> list[dict]:
    try:
        with open(_events_path(run_dir), "r", encoding="utf-8") as f:
            return [json.loads(line) for line in f if line.strip()]
    except FileNotFoundError:
        return []


def get_status(run_dir: str) -> dict[str, Any]:
    return load_manifest(run_dir).get("status", {
        "stage": "idle",
        "progress": 0.0,
        "message": "Not started",
    })


def set_status(run_dir: str, stage: str, progress: float, message: str) -> None:
    """Update the run status and emit a status event."""
    status = {"stage": stage, "progress": progress, "message": message}
    manifest = load_manifest(run_dir)
    manifest["status"] = status
    _write_manifest(run_dir, manifest)
    emit_event(run_dir, {"event": "status_update", **status})
