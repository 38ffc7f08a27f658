"""Deterministic serialization for run artifacts.

JSON with every float printed at 17 significant digits, which
round-trips binary64 exactly, and a small CSV writer for textures.
NaN and infinities become null on the JSON side (the CSV keeps nan).
"""

import csv
import json
import math

import numpy as np

__all__ = ["format_float", "dumps", "write_json", "read_json",
           "write_texture_csv", "read_texture_csv"]

TEXTURE_COLUMNS = ("kx", "ky", "sbar_x", "sbar_y", "sbar_z", "omega", "defined")


def format_float(x):
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return "null"
    return format(x, ".17g")


def _render(obj, indent, level):
    pad = " " * (indent * (level + 1))
    close_pad = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _render(obj.tolist(), indent, level)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [_render(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(pad + s for s in items) + "\n" + close_pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{json.dumps(str(k))}: {_render(v, indent, level + 1)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(pad + s for s in items) + "\n" + close_pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    return _render(obj, indent, 0) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_texture_csv(path, kx_values, ky_values, s_bar, omega, defined):
    """One row per grid node, kx-major, 17-significant-digit floats."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(TEXTURE_COLUMNS)
        for i, kx in enumerate(kx_values):
            for j, ky in enumerate(ky_values):
                row = [format(float(v), ".17g") for v in
                       (kx, ky, *s_bar[i, j], omega[i, j])]
                wr.writerow(row + [int(bool(defined[i, j]))])


def read_texture_csv(path):
    """Inverse of write_texture_csv; returns the same five arrays."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if tuple(header) != TEXTURE_COLUMNS:
            raise ValueError(f"unexpected texture header {header}")
        rows = [r for r in rd if r]
    kx_values = sorted({float(r[0]) for r in rows})
    ky_values = sorted({float(r[1]) for r in rows})
    nx, ny = len(kx_values), len(ky_values)
    if len(rows) != nx * ny:
        raise ValueError("texture rows do not form a full grid")
    ix = {v: i for i, v in enumerate(kx_values)}
    iy = {v: j for j, v in enumerate(ky_values)}
    s_bar = np.full((nx, ny, 3), np.nan)
    omega = np.full((nx, ny), np.nan)
    defined = np.zeros((nx, ny), dtype=bool)
    for r in rows:
        i, j = ix[float(r[0])], iy[float(r[1])]
        s_bar[i, j] = [float(r[2]), float(r[3]), float(r[4])]
        omega[i, j] = float(r[5])
        defined[i, j] = bool(int(r[6]))
    return (np.array(kx_values), np.array(ky_values), s_bar, omega, defined)
