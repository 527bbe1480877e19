"""Coulomb reference field and the auxiliary linear solves.

Only regular parts live on the grid:

* h0, h_inf:  discrete-harmonic, traces -phiC and phi_inf - phiC
* p:          div(eps grad p) = 0 with trace phi_inf
* w:          div(eps grad (phiC + w)) = 0 away from the charges, trace phi_inf - phiC
"""

from dataclasses import dataclass

import numpy as np

from .elliptic import assemble, constant_operator, solve_dirichlet
from .errors import GeometryError, SingularityError
from .geometry.grid import ScalarField

SINGULAR_DIST = 1e-12
CHARGE_CLEARANCE_CELLS = 2.0


@dataclass(frozen=True, eq=False)
class PointChargeSet:
    positions: np.ndarray
    charges: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 3)
        q = np.array(self.charges, dtype=float).reshape(-1)
        if len(pos) != len(q) or len(q) == 0:
            raise ValueError("need matching, nonempty positions and charges")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "charges", q)

    def __len__(self):
        return len(self.charges)

    def scaled(self, a):
        return PointChargeSet(self.positions, a * self.charges)

    def check_placement(self, ls, extra_clearance=0.0):
        """Charges must sit in the solute, at least 2h from the interface."""
        phi = ls(self.positions)
        need = CHARGE_CLEARANCE_CELLS * ls.grid.h + extra_clearance
        bad = np.flatnonzero(phi > -need)
        if bad.size:
            i = bad[0]
            raise GeometryError(
                f"charge {i} at {self.positions[i].tolist()} has phi = {phi[i]:.4g}; needs <= {-need:.4g}")
        if not np.all(ls.grid.contains(self.positions)):
            raise GeometryError("charge outside the box")


def _distances(c, x):
    x = np.asarray(x, dtype=float)
    rel = x[..., None, :] - c.positions
    r = np.linalg.norm(rel, axis=-1)
    return rel, r


def coulomb_potential(c, eps_minus, x):
    """sum_i Q_i / (4 pi eps_minus |x - x_i|)."""
    _, r = _distances(c, x)
    if np.any(r < SINGULAR_DIST):
        raise SingularityError("Coulomb potential evaluated at a point charge")
    return (c.charges / r).sum(axis=-1) / (4.0 * np.pi * eps_minus)


def coulomb_gradient(c, eps_minus, x):
    rel, r = _distances(c, x)
    if np.any(r < SINGULAR_DIST):
        raise SingularityError("Coulomb gradient evaluated at a point charge")
    g = -(c.charges[:, None] * rel / r[..., None] ** 3).sum(axis=-2)
    return g / (4.0 * np.pi * eps_minus)


def coulomb_on_grid(c, eps_minus, grid):
    """phiC at every node; nodes coinciding with a charge get 0 (they never enter a used stencil)."""
    pts = grid.points()
    out = np.zeros(grid.shape)
    for xi, qi in zip(c.positions, c.charges):
        r = np.linalg.norm(pts - xi, axis=-1)
        with np.errstate(divide="ignore"):
            term = np.where(r < SINGULAR_DIST, 0.0, qi / np.maximum(r, SINGULAR_DIST))
        out += term
    return out / (4.0 * np.pi * eps_minus)


def trace_on_grid(boundary, grid):
    """Node array holding the outer trace phi_inf on the box faces (0 inside)."""
    out = np.zeros(grid.shape)
    if boundary is None:
        return out
    mask = grid.boundary_mask()
    out[mask] = boundary(grid.points()[mask])
    return out


def solve_hat_phi(c, eps_minus, boundary, grid, tol=1e-10):
    """Regular part h = phi_hat - phiC with Laplace(h) = 0, h = trace - phiC on the box faces.

    ``boundary`` is None (zero trace) or a callable giving phi_inf.
    """
    bmask = grid.boundary_mask()
    data = trace_on_grid(boundary, grid)
    pts = grid.points()[bmask]
    data[bmask] -= coulomb_potential(c, eps_minus, pts)
    if not np.any(data[bmask]):
        return ScalarField(grid, np.zeros(grid.shape), "h0" if boundary is None else "h_inf")
    op = constant_operator(grid, 1.0)
    h, _ = solve_dirichlet(op, data, tol=tol)
    return ScalarField(grid, h, "h0" if boundary is None else "h_inf")


def solve_phi_Gamma_infty(sys, ls, op=None, tol=1e-10):
    """div(eps_Gamma grad p) = 0 with p = phi_inf on the box faces."""
    grid = ls.grid
    data = trace_on_grid(sys.boundary, grid)
    if not np.any(data):
        return ScalarField(grid, np.zeros(grid.shape), "phi_Gamma_inf")
    op = op or assemble(ls, sys.eps_minus, sys.eps_plus, rule=sys.face_rule)
    p, _ = solve_dirichlet(op, data, tol=tol)
    return ScalarField(grid, p, "phi_Gamma_inf")


def excess_faces(op, eps_minus):
    """Face weights eps_f - eps_minus (zero on faces inside the solute)."""
    return [f - eps_minus for f in op.faces]


def interface_source(op, eps_minus, phic_grid):
    """-D^T (eps_f - eps_minus) D phiC: the weak right-hand side for w."""
    from .elliptic import EllipticOperator, _apply_kernel

    faces = excess_faces(op, eps_minus)
    out = np.empty(op.grid.shape)
    _apply_kernel(np.ascontiguousarray(phic_grid), *faces, np.zeros(op.grid.shape), *op._c, out)
    return -out


def solve_hat_phi_Gamma_infty(sys, ls, op=None, phic=None, tol=1e-10):
    """Regular part w = phi_hat_Gamma_inf - phiC.

    Weak form: a(w, eta) = -(sum over faces) (eps_f - eps_minus) DphiC Deta,
    which is (eps_+ - eps_-) times the interface flux of phiC; trace phi_inf - phiC.
    """
    grid = ls.grid
    op = op or assemble(ls, sys.eps_minus, sys.eps_plus, rule=sys.face_rule)
    if phic is None:
        phic = coulomb_on_grid(sys.charges, sys.eps_minus, grid)
    data = trace_on_grid(sys.boundary, grid)
    bmask = grid.boundary_mask()
    data[bmask] -= phic[bmask]
    src = interface_source(op, sys.eps_minus, phic)
    w, _ = solve_dirichlet(op, data, source=src, tol=tol)
    return ScalarField(grid, w, "w")
