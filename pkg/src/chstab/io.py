"""CSV formats: field snapshots and per-step time series."""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .dynamics import TrajectoryRecord
from .spectral import Discretization, SpectralField, from_grid

TIMESERIES_HEADER = [
    "n", "t", "z_norm_sq", "energy_lhs", "energy_rhs", "feedback_energy", "newton_iters",
]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_field_csv(f: SpectralField, path) -> None:
    """Grid samples of ``f``: header ``x[,y],value``, row-major over the grid."""
    d = f.disc
    values = f.to_grid()
    pts = d.points().reshape(-1, d.dim)
    header = ["x", "y"][: d.dim] + ["value"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for p, v in zip(pts, values.ravel()):
            w.writerow([_fmt(c) for c in p] + [_fmt(v)])


def read_field_csv(path, disc: Discretization) -> SpectralField:
    """Inverse of :func:`write_field_csv`; the file must sample ``disc``'s grid."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["x", "y"][: disc.dim] + ["value"]
        if header != expected:
            raise ValueError(f"{path}: header {header} does not match {expected}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed row {row}") from None
            if len(row) != len(expected):
                raise ValueError(f"{path}:{lineno}: expected {len(expected)} columns")
    data = np.array(rows)
    if data.shape[0] != disc.grid**disc.dim:
        raise ValueError(
            f"{path}: {data.shape[0]} samples, grid needs {disc.grid**disc.dim}"
        )
    if not np.allclose(data[:, :-1], disc.points().reshape(-1, disc.dim), atol=1e-12):
        raise ValueError(f"{path}: sample points do not match the collocation grid")
    return from_grid(data[:, -1].reshape(disc.grid_shape), disc)


def write_timeseries_csv(record: TrajectoryRecord, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMESERIES_HEADER)
        for n in range(len(record.t)):
            w.writerow([
                n, _fmt(record.t[n]), _fmt(record.z_norm_sq[n]),
                _fmt(record.energy_lhs[n]), _fmt(record.energy_rhs[n]),
                _fmt(record.feedback_energy[n]), int(record.newton_iters[n]),
            ])


def read_timeseries_csv(path) -> dict[str, np.ndarray]:
    """Columns of a time-series file; malformed rows are reported with their line number."""
    path = Path(path)
    cols = {k: [] for k in TIMESERIES_HEADER}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TIMESERIES_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(TIMESERIES_HEADER):
                raise ValueError(f"{path}: row {lineno}: expected {len(TIMESERIES_HEADER)} fields")
            try:
                vals = [float(v) for v in row]
            except ValueError:
                raise ValueError(f"{path}: row {lineno}: non-numeric value in {row}") from None
            if any(math.isinf(v) for v in vals):
                raise ValueError(f"{path}: row {lineno}: infinite value")
            for k, v in zip(TIMESERIES_HEADER, vals):
                cols[k].append(v)
    out = {k: np.array(v) for k, v in cols.items()}
    out["n"] = out["n"].astype(int)
    out["newton_iters"] = out["newton_iters"].astype(int)
    return out
