"""Signed-distance level sets of the dielectric boundary.

Convention: phi < 0 in the solute, phi > 0 in the solvent.  Nodes with
phi == 0 are classified as solute everywhere in the package.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from ..errors import GeometryError, GridMismatchError
from .grid import GridSpec, interpolate, spline_gradient

TUBE_CELLS = 3.0
SPHERE_CLEARANCE_CELLS = 4.0


@dataclass(frozen=True, eq=False)
class LevelSet:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise GridMismatchError(f"values shape {values.shape} != grid shape {self.grid.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    # classification -------------------------------------------------------
    @property
    def inside(self):
        """Solute mask (phi <= 0, tie-break to the solute)."""
        return self.values <= 0.0

    @property
    def outside(self):
        return self.values > 0.0

    def interface_band(self):
        """Nodes with a 6-neighbour on the other side of the interface."""
        ins = self.inside
        band = np.zeros_like(ins)
        for axis in range(3):
            lo = [slice(None)] * 3
            hi = [slice(None)] * 3
            lo[axis] = slice(0, -1)
            hi[axis] = slice(1, None)
            cross = ins[tuple(lo)] != ins[tuple(hi)]
            band[tuple(lo)] |= cross
            band[tuple(hi)] |= cross
        return band

    def tube(self, width=None):
        if width is None:
            width = TUBE_CELLS * self.grid.h
        return np.abs(self.values) < width

    def check_boundary_clearance(self):
        """Raise unless every node on the box boundary lies in the solvent."""
        if np.any(self.values[self.grid.boundary_mask()] <= 0.0):
            raise GeometryError("interface touches the outer boundary")

    # smooth evaluation ----------------------------------------------------
    @cached_property
    def _coeffs(self):
        return ndimage.spline_filter(self.values, order=3, mode="mirror")

    @cached_property
    def gradient_grid(self):
        """Centered-difference gradient at the nodes, shape ``shape + (3,)``."""
        return np.stack(np.gradient(self.values, *self.grid.spacing, edge_order=2), axis=-1)

    @cached_property
    def curvature_grid(self):
        """Mean curvature (k1 + k2) / 2 = div(n) / 2 with n = grad phi / |grad phi|."""
        g = self.gradient_grid
        norm = np.linalg.norm(g, axis=-1)
        n = g / np.maximum(norm, 1e-12)[..., None]
        div = sum(np.gradient(n[..., a], self.grid.spacing[a], axis=a, edge_order=2)
                  for a in range(3))
        return 0.5 * div

    def __call__(self, x):
        """Cubic-spline interpolant of phi at physical points."""
        return interpolate(self.grid, self.values, x, order=3, coeffs=self._coeffs)

    def gradient(self, x):
        """Exact gradient of the cubic-spline interpolant, so ``normal`` is consistent with ``__call__``."""
        return spline_gradient(self.grid, self._coeffs, x)

    def normal(self, x):
        g = self.gradient(x)
        norm = np.linalg.norm(g, axis=-1, keepdims=True)
        # critical points of phi (far from the interface) get a zero normal
        return np.divide(g, norm, out=np.zeros_like(g), where=norm > 0)

    def curvature(self, x):
        return interpolate(self.grid, self.curvature_grid, x, order=1)

    def gradient_defect(self, width=None):
        """max | |grad phi| - 1 | over the tube."""
        norm = np.linalg.norm(self.gradient_grid, axis=-1)
        tube = self.tube(width)
        # one-sided differences at the box faces are not representative
        tube &= ~self.grid.boundary_mask()
        if not tube.any():
            return 0.0
        return float(np.max(np.abs(norm[tube] - 1.0)))


def levelset_sphere(center, radius, grid):
    center = np.asarray(center, dtype=float)
    if radius < 0:
        raise GeometryError("negative radius")
    clearance = SPHERE_CLEARANCE_CELLS * grid.h
    lo = center - radius
    hi = center + radius
    if np.any(lo < np.asarray(grid.lower) + clearance) or np.any(hi > np.asarray(grid.upper) - clearance):
        raise GeometryError(
            f"sphere (center {center.tolist()}, radius {radius}) needs clearance {clearance:.4g} "
            "from the box")
    pts = grid.points()
    phi = np.linalg.norm(pts - center, axis=-1) - radius
    return LevelSet(grid, phi)


def levelset_union(a, b, redistance_tube=True):
    if a.grid != b.grid:
        raise GridMismatchError("level sets live on different grids")
    ls = LevelSet(a.grid, np.minimum(a.values, b.values))
    return redistance(ls) if redistance_tube else ls


# redistancing ---------------------------------------------------------------

def _point_segment_dist2(p, a, b):
    ab = b - a
    t = np.einsum("...i,...i->...", p - a, ab) / np.maximum(np.einsum("...i,...i->...", ab, ab), 1e-300)
    t = np.clip(t, 0.0, 1.0)
    d = p - (a + t[..., None] * ab)
    return np.einsum("...i,...i->...", d, d)


def point_triangle_distance(p, a, b, c):
    """Euclidean distance from points ``p`` to triangles ``(a, b, c)`` (broadcasting)."""
    e0 = b - a
    e1 = c - a
    nrm = np.cross(e0, e1)
    nn = np.einsum("...i,...i->...", nrm, nrm)
    w = p - a
    # barycentric coordinates of the projection onto the triangle plane
    s = np.einsum("...i,...i->...", np.cross(w, e1), nrm) / np.maximum(nn, 1e-300)
    t = np.einsum("...i,...i->...", np.cross(e0, w), nrm) / np.maximum(nn, 1e-300)
    inside = (s >= 0) & (t >= 0) & (s + t <= 1)
    plane = np.einsum("...i,...i->...", w, nrm) ** 2 / np.maximum(nn, 1e-300)
    edges = np.minimum(np.minimum(_point_segment_dist2(p, a, b), _point_segment_dist2(p, b, c)),
                       _point_segment_dist2(p, c, a))
    return np.sqrt(np.where(inside, plane, edges))


def redistance(ls, width=None, k=8):
    """Replace phi by the exact distance to its triangulated zero set inside the tube.

    Nodes adjacent to a sign change are kept, so edge crossings of the zero
    set (and anything computed from them) are unchanged.
    """
    from .interface import triangulate

    grid = ls.grid
    if width is None:
        width = TUBE_CELLS * grid.h
    verts, faces = triangulate(ls)
    tri = verts[faces]
    tree = cKDTree(tri.mean(axis=1))
    band = ls.interface_band()
    target = ls.tube(width) & ~band
    if not target.any():
        return ls
    pts = grid.points()[target]
    kk = min(k, len(faces))
    _, idx = tree.query(pts, k=kk)
    idx = np.asarray(idx).reshape(len(pts), kk)
    t = tri[idx]
    d = point_triangle_distance(pts[:, None, :], t[..., 0, :], t[..., 1, :], t[..., 2, :]).min(axis=1)
    values = np.array(ls.values)
    values[target] = np.where(ls.values[target] <= 0.0, -d, d)
    return LevelSet(grid, values)
