"""Report and table writing for a run directory."""

import json
import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Any
from typing import Iterator

import numpy as np
import pandas as pd

from src.config import SCHEMA_VERSION

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
REPORT_SCHEMA: dict[str, tuple[str, ...]] = {
    "admissibility": ("margin", "hyperbola_ok", "alpha_window", "suggested_alpha", "theorem_applicable"),
    "solution": ("residual", "energy", "converged", "iterations", "u", "v", "problem"),
    "diagnostics": ("test_family", "operator", "solution", "identity_checks"),
    "spectrum": ("modes", "split", "condition_number"),
    "continuation": ("parameter", "values", "crossings", "dim_zero", "stopped"),
    "manifest": ("command", "seed", "status", "files"),
}


class ReportSchemaError(ValueError):
    """A payload does not match the documented report schema."""


def _encode(value: Any, level: int) -> str:
    pad = "  " * (level + 1)
    close = "  " * level
    if value is None or isinstance(value, (bool, np.bool_)):
        return "null" if value is None else ("true" if value else "false")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        number = float(value)
        return "null" if not math.isfinite(number) else format(number, ".17g")
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, np.ndarray):
        return _encode(value.tolist(), level)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(key))}: {_encode(value[key], level + 1)}" for key in sorted(value)]
        return "{\n" + ",\n".join(items) + f"\n{close}}}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        return "[\n" + ",\n".join(f"{pad}{_encode(item, level + 1)}" for item in value) + f"\n{close}]"
    raise TypeError(f"Cannot serialise {type(value).__name__}")


def format_json(payload: dict) -> str:
    """Deterministic JSON: sorted keys, 17 significant digits, non-finite floats as null."""
    return _encode(payload, 0) + "\n"


def validate_report(payload: dict) -> None:
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise ReportSchemaError(f"schema_version must be {SCHEMA_VERSION!r}, got {payload.get('schema_version')!r}")
    kind = payload.get("kind")
    if kind not in REPORT_SCHEMA:
        raise ReportSchemaError(f"Unknown report kind {kind!r}, expected one of {sorted(REPORT_SCHEMA)}")
    missing = [key for key in REPORT_SCHEMA[kind] if key not in payload]
    if missing:
        raise ReportSchemaError(f"{kind} report is missing {missing}")


def write_report(path: Path, payload: dict, kind: str) -> Path:
    document = {**payload, "schema_version": SCHEMA_VERSION, "kind": kind}
    validate_report(document)
    path.write_text(format_json(document), encoding="utf-8")
    logger.debug(f"Wrote {kind} report to {path}")
    return path


def write_table(path: Path, frame: pd.DataFrame) -> Path:
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


@dataclass
class RunManifest:
    directory: Path
    command: str
    seed: int
    status: str = "running"
    files: list[str] = field(default_factory=list)

    def write_json(self, name: str, payload: dict, kind: str) -> Path:
        path = write_report(self.directory / name, payload, kind)
        self.files.append(name)
        return path

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = write_table(self.directory / name, frame)
        self.files.append(name)
        return path

    def to_dict(self) -> dict[str, str | int | list[str]]:
        return {
            "command": self.command,
            "seed": self.seed,
            "status": self.status,
            "files": sorted(self.files),
        }


@contextmanager
def run_directory(directory: Path, command: str, seed: int) -> Iterator[RunManifest]:
    """Context manager for one pipeline run.

    Marks the run completed on a clean exit (unless the pipeline set another status), failed on an
    exception, and always writes manifest.json listing the files produced.
    """
    directory.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(directory=directory, command=command, seed=seed)
    try:
        yield manifest
        if manifest.status == "running":
            manifest.status = "completed"
    except BaseException:
        manifest.status = "failed"
        raise
    finally:
        write_report(directory / MANIFEST_NAME, manifest.to_dict(), "manifest")
        marker = "✅" if manifest.status == "completed" else "❌"
        logger.info(f"{marker} Run {command} {manifest.status}: {directory}")
