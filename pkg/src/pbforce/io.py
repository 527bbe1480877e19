"""Grid files, legacy VTK output and CSV line profiles.

Binary grid file layout (all little-endian):

    8 bytes   magic b"PBFGRID1"
    3 x int64 nodes per axis (nx, ny, nz)
    6 x f64   lower corner, upper corner
    f64 data  nx*ny*nz values, index (i, j, k) with k varying fastest
"""

import csv
import struct
from pathlib import Path

import numpy as np

from .geometry.grid import GridSpec
from .geometry.levelset import LevelSet

MAGIC = b"PBFGRID1"
_HEADER = struct.Struct("<8s3q6d")


def write_grid_binary(path, grid, values):
    values = np.asarray(values, dtype="<f8")
    if values.shape != grid.shape:
        raise ValueError(f"values shape {values.shape} != grid {grid.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, *grid.shape, *grid.lower, *grid.upper))
        fh.write(np.ascontiguousarray(values).tobytes())


def read_grid_binary(path):
    """Returns (GridSpec, values)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, nx, ny, nz, *bounds = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a grid file (magic {magic!r})")
    grid = GridSpec(tuple(bounds[:3]), tuple(bounds[3:]), (nx, ny, nz))
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if data.size != nx * ny * nz:
        raise ValueError(f"{path}: expected {nx * ny * nz} values, found {data.size}")
    return grid, data.reshape(grid.shape).astype(float)


def save_levelset(path, ls):
    write_grid_binary(path, ls.grid, ls.values)


def load_levelset(path):
    grid, values = read_grid_binary(path)
    return LevelSet(grid, values)


def _fmt(a):
    return " ".join(f"{v:.17g}" for v in a)


def write_vtk_structured_points(path, grid, fields, title="pbforce grid data"):
    """Legacy ASCII VTK; point data written with x varying fastest."""
    nx, ny, nz = grid.shape
    with open(path, "w") as fh:
        fh.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {nx} {ny} {nz}\n")
        fh.write(f"ORIGIN {_fmt(grid.lower)}\nSPACING {_fmt(grid.spacing)}\n")
        fh.write(f"POINT_DATA {nx * ny * nz}\n")
        for name, values in fields.items():
            values = np.asarray(values, dtype=float)
            if values.shape != grid.shape:
                raise ValueError(f"field {name} has shape {values.shape}")
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            flat = values.ravel(order="F")
            for start in range(0, flat.size, 6):
                fh.write(_fmt(flat[start:start + 6]) + "\n")


def write_vtk_polydata(path, points, point_data, normals=None, title="pbforce surface samples"):
    """Legacy ASCII VTK point cloud (one vertex cell per point) with scalar point data."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    with open(path, "w") as fh:
        fh.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET POLYDATA\n")
        fh.write(f"POINTS {n} double\n")
        for p in points:
            fh.write(_fmt(p) + "\n")
        fh.write(f"VERTICES {n} {2 * n}\n")
        for i in range(n):
            fh.write(f"1 {i}\n")
        fh.write(f"POINT_DATA {n}\n")
        if normals is not None:
            fh.write("NORMALS normal double\n")
            for v in np.asarray(normals, dtype=float):
                fh.write(_fmt(v) + "\n")
        for name, values in point_data.items():
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in np.asarray(values, dtype=float):
                fh.write(f"{v:.17g}\n")


def write_line_profile(path, field, start, stop, n=200, tag=None):
    """CSV of a field sampled (trilinear) on the segment start -> stop."""
    s, vals = field.line_profile(start, stop, n)
    start = np.asarray(start, dtype=float)
    pts = start + np.linspace(0.0, 1.0, n)[:, None] * (np.asarray(stop, dtype=float) - start)
    tag = tag or field.tag or "value"
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["s", "x", "y", "z", tag])
        for si, p, v in zip(s, pts, vals):
            wr.writerow([f"{si:.17g}", *(f"{c:.17g}" for c in p), f"{v:.17g}"])
