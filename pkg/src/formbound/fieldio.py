"""FBND1 binary field files and small-grid CSV export.

Layout (all little-endian)::

    b"FBND1"            5-byte magic
    int64 d, int64 n    grid dimension and points per axis
    float64 L           edge length
    float64[...]        samples, row-major; n**d values for a scalar field,
                        d * n**d (component-major) for a vector field
"""
import csv
import struct

import numpy as np

from .errors import InvalidParameter
from .spectral import TorusGrid

__all__ = ["write_field", "read_field", "field_to_csv"]

MAGIC = b"FBND1"
_HEADER = struct.Struct("<5sqqd")


def write_field(path, grid, values):
    values = np.asarray(values, dtype="<f8")
    if values.shape not in (grid.shape, (grid.d,) + grid.shape):
        raise InvalidParameter(f"field shape {values.shape} does not match {grid}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, grid.d, grid.n, float(grid.L)))
        fh.write(np.ascontiguousarray(values).tobytes())


def read_field(path):
    """Return ``(values, grid)``; the field rank is inferred from the payload size."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise InvalidParameter(f"{path}: truncated header")
        magic, d, n, L = _HEADER.unpack(head)
        if magic != MAGIC:
            raise InvalidParameter(f"{path}: bad magic {magic!r}")
        grid = TorusGrid(d, n, L)
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size == grid.size:
        return data.reshape(grid.shape).astype(float), grid
    if data.size == grid.d * grid.size:
        return data.reshape((grid.d,) + grid.shape).astype(float), grid
    raise InvalidParameter(
        f"{path}: payload has {data.size} values, expected {grid.size} or {grid.d * grid.size}"
    )


def field_to_csv(path, grid, values):
    """Write one row per node: the integer index triple, then the value(s)."""
    values = np.asarray(values, dtype=float)
    vector = values.shape == (grid.d,) + grid.shape
    idx_cols = [f"i{j}" for j in range(grid.d)]
    val_cols = [f"v{j}" for j in range(grid.d)] if vector else ["value"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(idx_cols + val_cols)
        for idx in np.ndindex(grid.shape):
            vals = values[(slice(None),) + idx] if vector else [values[idx]]
            w.writerow(list(idx) + [repr(float(v)) for v in vals])
