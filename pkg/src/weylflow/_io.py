"""Deterministic CSV/JSON emission and parsing.

Floats are written with 17 significant digits so artifacts round-trip
losslessly and identical runs produce identical bytes.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import ShapeError


def fmt(x):
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = [line.strip().split(",") for line in fh if line.strip()]
    values = np.array([[float(v) for v in row] for row in data]) \
        if data else np.zeros((0, len(header)))
    return header, values


def write_json(path, obj):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def trajectory_rows(pair, traj, controls=None):
    """CSV header and rows for a trajectory: ``t, x1..xd[, ctrl...]``.

    ``controls`` is an optional per-node list of flat control rows (the last
    node repeats the final interval's value so every row has one).
    """
    states = traj.states_matrix(pair if traj.space == "ambient" else None)
    d = states.shape[1]
    header = ["t"] + [f"x{i+1}" for i in range(d)]
    rows = []
    ctrl_width = 0
    if controls is not None:
        ctrl_width = len(controls[0])
        header += [f"ctrl{i+1}" for i in range(ctrl_width)]
    for i, t in enumerate(traj.times):
        row = [t] + list(states[i])
        if controls is not None:
            row += list(controls[i])
        rows.append(row)
    return header, rows


def flatten_group(pair, K):
    """Flat real row encoding a group element (complex parts interleaved)."""
    parts = K if isinstance(K, tuple) else (K,)
    out = []
    for M in parts:
        M = np.asarray(M)
        if np.iscomplexobj(M):
            out.extend(np.column_stack([M.real.ravel(), M.imag.ravel()]).ravel())
        else:
            out.extend(M.ravel())
    return out


def unflatten_group(pair, row):
    """Inverse of :func:`flatten_group` for the given pair."""
    row = np.asarray(row, dtype=float)
    kind = pair.kind
    if kind == "hermitian_evd":
        n = pair.n
        if row.size != 2 * n * n:
            raise ShapeError("bad group row width")
        inter = row.reshape(n * n, 2)
        return (inter[:, 0] + 1j * inter[:, 1]).reshape(n, n)
    if kind == "real_svd":
        p, q = pair.p, pair.q
        if row.size != p * p + q * q:
            raise ShapeError("bad group row width")
        return row[:p * p].reshape(p, p), row[p * p:].reshape(q, q)
    if kind == "polar":
        n = pair.n
        if row.size != n * n:
            raise ShapeError("bad group row width")
        return row.reshape(n, n)
    raise ShapeError(f"unknown pair kind {kind!r}")
