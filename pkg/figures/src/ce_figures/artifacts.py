"""Readers for the simulator's run-directory artifacts.

The renderer never recomputes model quantities: everything is read from the
CSV/JSON files written by the `clonal-evolve` command line, and validated
against their documented schemas before use.  Validation failures raise
SchemaError naming the offending file and column.
"""

from __future__ import annotations

import glob
import json
import os
import re
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

__all__ = ["SchemaError", "Totals", "Snapshot", "load_totals",
           "load_snapshot", "list_snapshots", "load_bound_curves"]


class SchemaError(ValueError):
    """An artifact file is missing, malformed, or fails its schema."""


@dataclass(frozen=True)
class Totals:
    path: str
    times: np.ndarray
    total: np.ndarray
    bands: np.ndarray  # (n_bands, n_times)


@dataclass(frozen=True)
class Snapshot:
    path: str
    time: float
    ages: np.ndarray
    lengths: np.ndarray
    density: np.ndarray  # (n_age, n_len)


def _read_rows(path: str) -> List[List[str]]:
    if not os.path.exists(path):
        raise SchemaError(f"{path}: file not found")
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    if len(rows) < 2:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _column(path: str, name: str, header: List[str],
            body: List[List[str]]) -> np.ndarray:
    if name not in header:
        raise SchemaError(f"{path}: missing column {name!r}")
    idx = header.index(name)
    try:
        col = np.array([float(row[idx]) for row in body])
    except (ValueError, IndexError):
        raise SchemaError(f"{path}: non-numeric data in column {name!r}")
    if not np.all(np.isfinite(col)):
        raise SchemaError(f"{path}: NaN or infinity in column {name!r}")
    return col


def load_totals(run_dir: str) -> Totals:
    path = os.path.join(run_dir, "totals.csv")
    rows = _read_rows(path)
    header, body = rows[0], rows[1:]
    times = _column(path, "time", header, body)
    total = _column(path, "total", header, body)
    band_names = [h for h in header if re.fullmatch(r"band_\d+", h)]
    band_names.sort(key=lambda h: int(h.split("_")[1]))
    bands = np.array([_column(path, h, header, body) for h in band_names])
    return Totals(path=path, times=times, total=total, bands=bands)


def list_snapshots(run_dir: str) -> Dict[float, str]:
    """Snapshot files keyed by their time stamp."""
    out = {}
    for path in glob.glob(os.path.join(run_dir, "snapshot_*.csv")):
        stem = os.path.basename(path)[len("snapshot_"):-len(".csv")]
        try:
            out[float(stem)] = path
        except ValueError:
            raise SchemaError(f"{path}: unparseable snapshot time {stem!r}")
    if not out:
        raise SchemaError(f"{run_dir}: no snapshot_<t>.csv files")
    return out


def load_snapshot(path: str) -> Snapshot:
    rows = _read_rows(path)
    header, body = rows[0], rows[1:]
    if header[0] != "age/length":
        raise SchemaError(f"{path}: missing column 'age/length'")
    try:
        lengths = np.array([float(v) for v in header[1:]])
        ages = np.array([float(row[0]) for row in body])
        density = np.array([[float(v) for v in row[1:]] for row in body])
    except ValueError:
        raise SchemaError(f"{path}: non-numeric data in density grid")
    if density.shape != (len(ages), len(lengths)):
        raise SchemaError(f"{path}: ragged density grid")
    if not np.all(np.isfinite(density)):
        raise SchemaError(f"{path}: NaN in column 'density'")
    stem = os.path.basename(path)[len("snapshot_"):-len(".csv")]
    return Snapshot(path=path, time=float(stem), ages=ages, lengths=lengths,
                    density=density)


def load_bound_curves(run_dir: str):
    path = os.path.join(run_dir, "bound_curves.csv")
    rows = _read_rows(path)
    header, body = rows[0], rows[1:]
    return (
        _column(path, "length", header, body),
        _column(path, "mother_estimate", header, body),
        _column(path, "daughter_estimate", header, body),
    )


def load_spectrum(run_dir: str) -> dict:
    path = os.path.join(run_dir, "spectrum.json")
    if not os.path.exists(path):
        raise SchemaError(f"{path}: file not found")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: malformed JSON ({exc})")
    for key in ("radius", "lambda_star", "bounds", "irreducible"):
        if key not in doc:
            raise SchemaError(f"{path}: missing column {key!r}")
    return doc
