"""Snapshot files and CSV tables.

A snapshot file is one line of JSON header terminated by ``\\n`` followed
by ``n`` little-endian float64 physical samples.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .spectral import Field, Grid1D, make_grid

SNAPSHOT_FORMAT = "oscillakdv-snapshot"
SNAPSHOT_VERSION = 1
SCALAR_COLUMNS = ("t", "mass", "energy", "h1_norm", "g_value")


def write_snapshot(path, field: Field, t: float, k: int, coefficient_digest: str = "",
                   step: int | None = None) -> None:
    header = {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "n": field.grid.n,
        "domain_length": field.grid.domain_length,
        "t": float(t),
        "k": int(k),
        "coefficient_digest": coefficient_digest,
    }
    if step is not None:
        header["step"] = int(step)
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(payload)
    os.replace(tmp, path)


def read_snapshot(path, grid: Grid1D | None = None) -> tuple[Field, dict]:
    with open(path, "rb") as fh:
        blob = fh.read()
    nl = blob.find(b"\n")
    if nl < 0:
        raise ConfigurationError([(str(path), "not a snapshot file (no header line)")])
    try:
        header = json.loads(blob[:nl])
    except json.JSONDecodeError as exc:
        raise ConfigurationError([(str(path), f"bad snapshot header: {exc}")]) from None
    if header.get("format") != SNAPSHOT_FORMAT:
        raise ConfigurationError([(str(path), "not a snapshot file")])
    if header.get("version") != SNAPSHOT_VERSION:
        raise ConfigurationError([(str(path), f"unsupported version {header.get('version')}")])
    payload = np.frombuffer(blob[nl + 1:], dtype="<f8")
    if payload.size != header["n"]:
        raise ConfigurationError([(str(path), f"payload has {payload.size} samples, "
                                              f"header says {header['n']}")])
    if grid is None:
        grid = make_grid(header["n"], header["domain_length"])
    elif grid.key() != (header["n"], header["domain_length"]):
        raise ConfigurationError([(str(path), "snapshot grid does not match the run grid")])
    return Field(grid, payload.astype(float)), header


def snapshot_name(index: int) -> str:
    return f"snap_{index:05d}.bin"


def list_snapshots(directory) -> list:
    return sorted(Path(directory).glob("snap_*.bin"))


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v
