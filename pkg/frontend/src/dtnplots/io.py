"""Readers for dtnlab artifacts: header-tagged CSV and versioned JSON."""
from __future__ import annotations

import csv
import json
import re
from pathlib import Path

from . import SCHEMA_VERSION

_HEADER_RE = re.compile(r"^# dtnlab version=(\S+) config_hash=(\S+)")


class SchemaError(Exception):
    """Input file is missing, untagged, or from an incompatible writer."""


def _check_version(version: str, path) -> None:
    major_minor = ".".join(version.split(".")[:2])
    if major_minor != SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: artifact schema {version} does not match the supported "
            f"schema {SCHEMA_VERSION}.x"
        )


def read_artifact_csv(path) -> tuple[dict, list[dict]]:
    """Parse a dtnlab CSV; returns (header metadata, data rows)."""
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"{path}: no such file")
    with open(path) as fh:
        m = _HEADER_RE.match(fh.readline())
        if m is None:
            raise SchemaError(f"{path}: missing dtnlab header line")
        _check_version(m.group(1), path)
        rows = list(csv.DictReader(fh))
    return {"version": m.group(1), "config_hash": m.group(2)}, rows


def read_artifact_json(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"{path}: no such file")
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not a JSON artifact ({exc})") from exc
    if "version" not in data:
        raise SchemaError(f"{path}: JSON artifact carries no version field")
    _check_version(data["version"], path)
    return data


def require_columns(rows: list[dict], columns: set[str], path) -> None:
    if not rows:
        raise SchemaError(f"{path}: artifact holds no data rows")
    missing = columns - set(rows[0])
    if missing:
        raise SchemaError(f"{path}: missing columns {sorted(missing)}")


def mode_series(rows: list[dict], mode: int) -> tuple[list[float], list[complex]]:
    """Time series of one Fourier coefficient from an evolution CSV."""
    times, coeffs = [], []
    for r in rows:
        if int(r["mode_index"]) == mode:
            times.append(float(r["time"]))
            coeffs.append(complex(float(r["coeff_re"]), float(r["coeff_im"])))
    return times, coeffs


def per_time(rows: list[dict], column: str) -> tuple[list[float], list[float]]:
    """One value of a per-state monitor column for each distinct time."""
    seen: dict[float, float] = {}
    for r in rows:
        seen.setdefault(float(r["time"]), float(r[column]))
    times = sorted(seen)
    return times, [seen[t] for t in times]
