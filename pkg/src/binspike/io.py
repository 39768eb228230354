"""CSV and JSON file formats.

Traces and spike trains are CSV files with header ``n,value``.  A trace may
have a JSON sidecar (same path, ``.json`` suffix) holding
``{alpha, amplitude, decimation, sigma, seed}``.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import FormatError
from .model import ArModel, SpikeTrain, Trace


def write_vector(path, values, header=("n", "value")) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for n, v in enumerate(np.asarray(values, dtype=float)):
            w.writerow((n, repr(float(v))))


def write_columns(path, columns: dict) -> None:
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", *names])
        for n, row in enumerate(zip(*cols)):
            w.writerow([n, *(repr(float(v)) for v in row)])


def read_vector(path) -> np.ndarray:
    """Read an ``n,value`` CSV; rows must be numbered 0, 1, 2, ..."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0][:2]] != ["n", "value"]:
        raise FormatError(f"{path}: expected header 'n,value'")
    vals = []
    for i, row in enumerate(rows[1:]):
        if not row:
            continue
        try:
            n, v = int(row[0]), float(row[1])
        except (ValueError, IndexError) as exc:
            raise FormatError(f"{path}: bad row {i + 2}: {row!r}") from exc
        if n != len(vals):
            raise FormatError(f"{path}: row index {n} out of sequence")
        vals.append(v)
    return np.asarray(vals)


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_sidecar(path, model: ArModel, sigma: float = 0.0, seed=None) -> None:
    meta = {**model.to_dict(), "sigma": sigma, "seed": seed}
    sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n")


def read_sidecar(path) -> dict | None:
    p = sidecar_path(path)
    if not p.exists():
        return None
    meta = json.loads(p.read_text())
    missing = {"alpha", "amplitude", "decimation"} - set(meta)
    if missing:
        raise FormatError(f"{p}: missing keys {sorted(missing)}")
    return meta


def read_trace(path, model: ArModel | None = None) -> Trace:
    """Load a trace; the sidecar supplies the model unless ``model`` is given."""
    values = read_vector(path)
    meta = read_sidecar(path) or {}
    if model is None:
        if not meta:
            raise FormatError(f"{path}: no model given and no sidecar {sidecar_path(path)}")
        model = ArModel(meta["alpha"], meta["amplitude"], meta["decimation"])
    sigma = float(meta.get("sigma") or 0.0)
    return Trace(values, model, noisy=sigma > 0, noise_sigma=sigma, meta=meta)


def write_trace(path, trace: Trace, seed=None) -> None:
    write_vector(path, trace.values)
    write_sidecar(path, trace.model, trace.noise_sigma, seed)


def read_train(path, amplitude: float | None = None, decimation: int = 1) -> SpikeTrain:
    values = read_vector(path)
    if amplitude is None:
        nz = values[values != 0]
        amplitude = float(nz[0]) if nz.size else 1.0
    return SpikeTrain(values, amplitude, decimation)


def spike_indices(path) -> np.ndarray:
    return np.flatnonzero(read_vector(path))
