"""Surface samples of the zero level set."""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from skimage.measure import marching_cubes

from ..errors import GeometryError

MIN_GRADIENT = 0.1


def triangulate(ls):
    """Marching-cubes triangulation of ``phi = 0``; returns (verts, faces)."""
    vals = ls.values
    if vals.min() > 0.0 or vals.max() <= 0.0:
        raise GeometryError("level set has no zero crossing")
    try:
        verts, faces, _, _ = marching_cubes(vals, level=0.0, spacing=ls.grid.spacing,
                                            allow_degenerate=False)
    except (ValueError, RuntimeError) as exc:
        raise GeometryError(f"interface extraction failed: {exc}") from exc
    if len(faces) == 0:
        raise GeometryError("empty interface")
    return verts + np.asarray(ls.grid.lower), faces


@dataclass(frozen=True, eq=False)
class InterfaceMesh:
    """Facet-centroid samples of the interface.

    ``normals`` point from the solute to the solvent, ``weights`` are facet
    areas and ``curvature`` is the mean curvature (k1 + k2) / 2.
    """

    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    curvature: np.ndarray
    verts: np.ndarray = None
    faces: np.ndarray = None

    def __len__(self):
        return len(self.weights)

    @property
    def area(self):
        return float(self.weights.sum())

    def integrate(self, values):
        return float(np.sum(np.asarray(values) * self.weights))

    def n_components(self):
        if self.faces is None:
            raise ValueError("mesh connectivity not stored")
        f = self.faces
        rows = np.concatenate([f[:, 0], f[:, 1], f[:, 2]])
        cols = np.concatenate([f[:, 1], f[:, 2], f[:, 0]])
        n = len(self.verts)
        adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        used = np.unique(f)
        ncomp, labels = connected_components(adj, directed=False)
        return len(np.unique(labels[used]))

    def subset(self, mask):
        return InterfaceMesh(self.points[mask], self.normals[mask], self.weights[mask],
                             self.curvature[mask])


def extract_interface(ls):
    verts, faces = triangulate(ls)
    tri = verts[faces]
    points = tri.mean(axis=1)
    cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    weights = 0.5 * np.linalg.norm(cross, axis=1)
    keep = weights > 0.0
    points, weights = points[keep], weights[keep]
    grad = ls.gradient(points)
    gnorm = np.linalg.norm(grad, axis=1)
    bad = np.flatnonzero(gnorm < MIN_GRADIENT)
    if bad.size:
        raise GeometryError(
            f"degenerate level-set gradient |grad phi| = {gnorm[bad[0]]:.3g} at sample "
            f"{points[bad[0]].tolist()}")
    normals = grad / gnorm[:, None]
    curvature = ls.curvature(points)
    return InterfaceMesh(points, normals, weights, curvature, verts, faces[keep])
