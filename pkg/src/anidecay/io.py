"""
Serialization: series CSV, JSON reports, SVG sparklines, field checkpoints
and run manifests.

Checkpoint layout (little-endian)::

    b"ANSD"                      magic
    u32                          format version (1)
    5 x f64                      n_h, n_h, n_v, l_h, l_v
    f64                          time
    3 x (n_h * n_h * n_v) pairs  (re, im) as f64 for v1, v2, v3

Each component is the full Fourier lattice in FFT index order with ``m1``
varying fastest, then ``m2``, then ``m3``.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import struct
from pathlib import Path

import numpy as np

from .solver import MONITOR_COLUMNS
from .spectral import Grid3, SpectralVectorField, expand_half_spectrum

SCHEMA_VERSION = 1
SERIES_COLUMNS = MONITOR_COLUMNS
CHECKPOINT_MAGIC = b"ANSD"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sI6d")


def format_float(x):
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), ".17g")


def write_csv(path, columns, rows):
    """Write ``rows`` (sequences aligned with ``columns``) as CSV."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row of length {len(row)} for {len(columns)} columns")
        w.writerow([format_float(x) for x in row])
    Path(path).write_text(buf.getvalue())


def read_csv(path):
    """Returns ``(columns, array)`` with one row per record (shape (n, ncols))."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        columns = next(r)
        data = [[float(x) for x in row] for row in r]
    arr = np.array(data, dtype=float).reshape(len(data), len(columns))
    return columns, arr


def series_to_csv(path, series, columns=None):
    """Dict of equal-length arrays to CSV in ``columns`` order."""
    columns = list(columns or series.keys())
    n = len(series[columns[0]]) if columns else 0
    rows = [[series[c][i] for c in columns] for i in range(n)]
    write_csv(path, columns, rows)


def record_to_csv(path, record):
    write_csv(path, list(SERIES_COLUMNS), record.rows())


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def to_json(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    Path(path).write_text(to_json(obj))


_ENTRY_SCHEMA = {
    "type": "object",
    "required": ["quantity", "target", "fitted", "stderr", "r2", "tolerance", "passed"],
    "properties": {
        "quantity": {"type": "string"},
        "target": {"type": "number"},
        "fitted": {"type": "number"},
        "stderr": {"type": "number", "minimum": 0},
        "r2": {"type": "number"},
        "tolerance": {"type": "number", "minimum": 0},
        "passed": {"type": "boolean"},
    },
    "additionalProperties": False,
}

REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "AcceptanceReport",
    "type": "object",
    "required": ["s", "s1", "variant", "window", "entries", "gap", "excluded_fraction", "passed"],
    "properties": {
        "s": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "s1": {"type": "number", "exclusiveMinimum": 2},
        "variant": {"enum": ["primary", "alternate"]},
        "window": {
            "type": "array",
            "items": {"type": "number", "exclusiveMinimum": 0},
            "minItems": 2,
            "maxItems": 2,
        },
        "entries": {"type": "array", "items": _ENTRY_SCHEMA, "minItems": 1},
        "gap": {
            "type": "object",
            "required": ["v3_exponent", "vh_exponent", "gap", "bound", "passed"],
            "properties": {
                "v3_exponent": {"type": "number"},
                "vh_exponent": {"type": "number"},
                "gap": {"type": "number"},
                "bound": {"type": "number"},
                "passed": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "excluded_fraction": {"type": "number", "minimum": 0},
        "passed": {"type": "boolean"},
    },
    "additionalProperties": False,
}


def svg_sparkline(times, values, title="", width=240, height=80):
    """Log-log polyline of the positive samples as a standalone SVG string."""
    t = np.asarray(times, float)
    y = np.asarray(values, float)
    keep = (t > 0) & (y > 0) & np.isfinite(y)
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    parts = [head, f"<title>{title}</title>"]
    if keep.sum() >= 2:
        x, z = np.log10(t[keep]), np.log10(y[keep])
        pad = 4.0

        def unit(a):
            span = a.max() - a.min()
            return (a - a.min()) / span if span > 0 else np.full_like(a, 0.5)

        px = pad + unit(x) * (width - 2 * pad)
        py = height - pad - unit(z) * (height - 2 * pad)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        parts.append(f'<polyline fill="none" stroke="black" stroke-width="1" points="{pts}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_sparklines(out_dir, series, columns):
    out = Path(out_dir)
    paths = []
    for c in columns:
        p = out / f"{c}.svg"
        p.write_text(svg_sparkline(series["t"], series[c], title=c))
        paths.append(p)
    return paths


def write_checkpoint(path, v, t):
    g = v.grid
    head = _HEADER.pack(
        CHECKPOINT_MAGIC, CHECKPOINT_VERSION, g.n_h, g.n_h, g.n_v, g.l_h, g.l_v, float(t)
    )
    full = expand_half_spectrum(np.asarray(v.coeffs), g.n_v)
    body = np.empty((3, g.n_h * g.n_h * g.n_v, 2), dtype="<f8")
    for i in range(3):
        flat = full[i].ravel(order="F")
        body[i, :, 0] = flat.real
        body[i, :, 1] = flat.imag
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(body.tobytes())


def read_checkpoint(path):
    """Returns ``(field, time)``."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated checkpoint header")
    magic, version, n1, n2, n3, l_h, l_v, t = _HEADER.unpack_from(raw)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    if n1 != n2:
        raise ValueError(f"{path}: horizontal sizes differ ({n1} vs {n2})")
    grid = Grid3(int(n1), int(n3), l_h, l_v)
    n = grid.n_h * grid.n_h * grid.n_v
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != 3 * n * 2:
        raise ValueError(f"{path}: expected {3 * n * 2} values, found {body.size}")
    body = body.reshape(3, n, 2)
    comps = []
    for i in range(3):
        flat = body[i, :, 0] + 1j * body[i, :, 1]
        full = flat.reshape(grid.shape, order="F")
        comps.append(full[:, :, : grid.n_v // 2 + 1])
    return SpectralVectorField(grid, np.stack(comps)), t


def write_manifest(path, settings, command, version, extra=None):
    """Resolved settings, package version, seed and command line."""
    manifest = {
        "command": command,
        "version": version,
        "schema_version": SCHEMA_VERSION,
        "seed": settings.get("data.seed"),
        "settings": settings,
    }
    if extra:
        manifest.update(extra)
    write_json(path, manifest)
    return manifest
