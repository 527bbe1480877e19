"""Uniform Cartesian grids and node-sampled fields."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import ndimage

from ..errors import GridMismatchError

MIN_NODES = 8


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned box ``[lower, upper]`` sampled by ``shape`` nodes per axis."""

    lower: tuple
    upper: tuple
    shape: tuple

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        shape = tuple(int(n) for n in self.shape)
        if not (len(lower) == len(upper) == len(shape) == 3):
            raise ValueError("GridSpec needs three axes")
        if any(u <= l for l, u in zip(lower, upper)):
            raise ValueError(f"upper {upper} must exceed lower {lower} on every axis")
        if any(n < MIN_NODES for n in shape):
            raise ValueError(f"need at least {MIN_NODES} nodes per axis, got {shape}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def cube(cls, half_width, n, center=(0.0, 0.0, 0.0)):
        c = np.asarray(center, dtype=float)
        return cls(tuple(c - half_width), tuple(c + half_width), (n, n, n))

    @property
    def spacing(self):
        return tuple((u - l) / (n - 1) for l, u, n in zip(self.lower, self.upper, self.shape))

    @property
    def h(self):
        """Largest spacing; used for tube widths and clearances."""
        return max(self.spacing)

    @property
    def cell_volume(self):
        hx, hy, hz = self.spacing
        return hx * hy * hz

    @property
    def size(self):
        return int(np.prod(self.shape))

    def axes(self):
        return tuple(np.linspace(l, u, n) for l, u, n in zip(self.lower, self.upper, self.shape))

    def points(self):
        """Node coordinates, shape ``shape + (3,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def boundary_mask(self):
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :, :] = mask[-1, :, :] = True
        mask[:, 0, :] = mask[:, -1, :] = True
        mask[:, :, 0] = mask[:, :, -1] = True
        return mask

    def to_index(self, x):
        """Fractional node index of physical points ``x`` (..., 3)."""
        x = np.asarray(x, dtype=float)
        return (x - np.asarray(self.lower)) / np.asarray(self.spacing)

    def contains(self, x, clearance=0.0):
        x = np.asarray(x, dtype=float)
        return np.all((x >= np.asarray(self.lower) + clearance)
                      & (x <= np.asarray(self.upper) - clearance), axis=-1)

    def refined(self, factor=2):
        """Grid over the same box with ``factor`` times as many cells per axis."""
        return GridSpec(self.lower, self.upper, tuple((n - 1) * factor + 1 for n in self.shape))

    def check_same(self, other):
        if self != other:
            raise GridMismatchError(f"grid mismatch: {self} vs {other}")


def interpolate(grid, values, x, order=1, coeffs=None):
    """Evaluate node data at physical points by spline interpolation.

    ``order=1`` is trilinear.  For ``order=3`` pass prefiltered ``coeffs``
    to avoid refiltering on every call.
    """
    x = np.asarray(x, dtype=float)
    idx = grid.to_index(x.reshape(-1, 3)).T
    if order == 1:
        out = ndimage.map_coordinates(values, idx, order=1, mode="nearest")
    else:
        if coeffs is None:
            coeffs = ndimage.spline_filter(values, order=order, mode="mirror")
        out = ndimage.map_coordinates(coeffs, idx, order=order, mode="mirror", prefilter=False)
    return out.reshape(x.shape[:-1])


def _bspline_weights(t):
    w = np.stack([(1 - t) ** 3, 3 * t**3 - 6 * t**2 + 4, -3 * t**3 + 3 * t**2 + 3 * t + 1, t**3]) / 6.0
    dw = np.stack([-0.5 * (1 - t) ** 2, 1.5 * t**2 - 2 * t, -1.5 * t**2 + t + 0.5, 0.5 * t**2])
    return w, dw


def _mirror(i, n):
    period = 2 * (n - 1)
    i = np.abs(i) % period
    return np.where(i >= n, period - i, i)


def spline_gradient(grid, coeffs, x):
    """Exact gradient of the cubic-spline interpolant with prefiltered ``coeffs`` (mirror mode)."""
    x = np.asarray(x, dtype=float)
    idx = grid.to_index(x.reshape(-1, 3))
    base = np.floor(idx).astype(np.int64)
    frac = idx - base
    ws, dws, ids = [], [], []
    for a in range(3):
        w, dw = _bspline_weights(frac[:, a])
        ws.append(w)
        dws.append(dw / grid.spacing[a])
        ids.append(_mirror(base[:, a][None, :] + np.arange(-1, 3)[:, None], grid.shape[a]))
    out = np.zeros((idx.shape[0], 3))
    for i in range(4):
        for j in range(4):
            for k in range(4):
                c = coeffs[ids[0][i], ids[1][j], ids[2][k]]
                out[:, 0] += c * dws[0][i] * ws[1][j] * ws[2][k]
                out[:, 1] += c * ws[0][i] * dws[1][j] * ws[2][k]
                out[:, 2] += c * ws[0][i] * ws[1][j] * dws[2][k]
    return out.reshape(x.shape)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Node values on a grid, tagged with the quantity they hold."""

    grid: GridSpec
    values: np.ndarray
    tag: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise GridMismatchError(f"values shape {values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"field '{self.tag}' has non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @cached_property
    def _cubic(self):
        return ndimage.spline_filter(self.values, order=3, mode="mirror")

    def at(self, x, order=1):
        if order == 3:
            return interpolate(self.grid, self.values, x, order=3, coeffs=self._cubic)
        return interpolate(self.grid, self.values, x, order=order)

    def __add__(self, other):
        self.grid.check_same(other.grid)
        return ScalarField(self.grid, self.values + other.values, self.tag)

    def scaled(self, factor, tag=None):
        return ScalarField(self.grid, factor * self.values, tag or self.tag)

    def line_profile(self, start, stop, n=101):
        """Trilinear samples along a segment; returns (arclength, values)."""
        start = np.asarray(start, dtype=float)
        stop = np.asarray(stop, dtype=float)
        s = np.linspace(0.0, 1.0, n)
        pts = start + s[:, None] * (stop - start)
        return s * np.linalg.norm(stop - start), self.at(pts)
