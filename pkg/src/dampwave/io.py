"""CSV writers and the WDWV1 binary trajectory format.

Floats are written with ``%.17g`` so that identical runs give identical
bytes and values round-trip exactly.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .spectral import Domain

MAGIC = b"WDWV1"
ENERGY_HEADER = ("t", "E", "dissipation_cum", "residual")
AUDIT_HEADER = ("t", "measured", "bound", "ratio")
SUMMARY_HEADER = ("name", "max_residual", "tolerance", "verdict")


def fmt(x):
    if isinstance(x, (str, bool)):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_energy_csv(path, traj, energy, residual):
    rows = zip(traj.times, energy, traj.dissipation_cum, residual)
    return write_csv(path, ENERGY_HEADER, rows)


def write_audit_csv(path, report):
    rows = []
    for t, measured, bound in report.samples:
        if bound == 0 or not np.isfinite(bound):
            ratio = float("nan") if measured != 0 else 0.0
        else:
            ratio = measured / bound
        rows.append((t, measured, bound, ratio))
    return write_csv(path, AUDIT_HEADER, rows)


def write_summary_csv(path, reports):
    return write_csv(path, SUMMARY_HEADER, [r.summary_row() for r in reports])


def write_trajectory(path, domain, times, u, v):
    """Write snapshots (u, v stacked along the first axis) in WDWV1 format."""
    times = np.asarray(times, dtype="<f8")
    u = np.asarray(u, dtype="<f8").reshape(len(times), -1)
    v = np.asarray(v, dtype="<f8").reshape(len(times), -1)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<BI", domain.dim, domain.modes))
        fh.write(np.asarray(domain.lengths, dtype="<f8").tobytes())
        fh.write(struct.pack("<I", len(times)))
        for t, a, b in zip(times, u, v):
            fh.write(struct.pack("<d", t))
            fh.write(a.tobytes())
            fh.write(b.tobytes())
    return path


def read_trajectory(path):
    """Return ``(domain, times, u, v)`` from a WDWV1 file."""
    data = Path(path).read_bytes()
    if data[:5] != MAGIC:
        raise ValueError(f"{path}: not a WDWV1 file")
    dim, modes = struct.unpack_from("<BI", data, 5)
    off = 10
    lengths = np.frombuffer(data, "<f8", dim, off)
    off += 8 * dim
    (count,) = struct.unpack_from("<I", data, off)
    off += 4
    domain = Domain(dim, tuple(lengths), modes)
    n = modes**dim
    rec = np.frombuffer(data, "<f8", count * (1 + 2 * n), off).reshape(count, 1 + 2 * n)
    if off + rec.nbytes != len(data):
        raise ValueError(f"{path}: trailing or missing bytes")
    shape = (count,) + domain.shape
    return domain, rec[:, 0].copy(), rec[:, 1:1 + n].reshape(shape), rec[:, 1 + n:].reshape(shape)
