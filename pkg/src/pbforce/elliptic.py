"""Variable-coefficient 7-point operator and Jacobi-preconditioned CG.

The operator acts on full node arrays; rows on the box boundary are zero
(Dirichlet data is lifted into the right-hand side).  ``A u`` at an interior
node is sum_f eps_f (u_i - u_nb) / h_axis^2 + d_i u_i, i.e. the weak form
a(u, v) = V * sum_f eps_f (Du)_f (Dv)_f divided by the cell volume V.
"""

from dataclasses import dataclass, field

import numba

numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
import numpy as np

from .errors import ConvergenceError, GridMismatchError
from .geometry.grid import ScalarField

FACE_RULES = ("nodal", "fraction")


@numba.njit(parallel=True, cache=True)
def _apply_kernel(u, ex, ey, ez, d, cx, cy, cz, out):
    nx, ny, nz = u.shape
    for i in numba.prange(nx):
        for j in range(ny):
            for k in range(nz):
                if i == 0 or j == 0 or k == 0 or i == nx - 1 or j == ny - 1 or k == nz - 1:
                    out[i, j, k] = 0.0
                    continue
                c = u[i, j, k]
                s = (ex[i, j, k] * (c - u[i + 1, j, k]) + ex[i - 1, j, k] * (c - u[i - 1, j, k])) * cx
                s += (ey[i, j, k] * (c - u[i, j + 1, k]) + ey[i, j - 1, k] * (c - u[i, j - 1, k])) * cy
                s += (ez[i, j, k] * (c - u[i, j, k + 1]) + ez[i, j, k - 1] * (c - u[i, j, k - 1])) * cz
                out[i, j, k] = s + d[i, j, k] * c
    return out


def _shifted(a, axis):
    lo = [slice(None)] * 3
    hi = [slice(None)] * 3
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    return a[tuple(lo)], a[tuple(hi)]


def harmonic_faces(eps_node):
    out = []
    for axis in range(3):
        a, b = _shifted(eps_node, axis)
        out.append(2.0 * a * b / (a + b))
    return out


def fraction_faces(phi, eps_minus, eps_plus):
    """Series (harmonic) average weighted by the solute fraction of each edge.

    The fraction is found from the linear interpolant of phi along the edge,
    so face values change continuously as the interface moves.
    """
    out = []
    for axis in range(3):
        a, b = _shifted(phi, axis)
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        theta = np.where(hi <= 0.0, 1.0, np.where(lo > 0.0, 0.0, -lo / np.where(hi > lo, hi - lo, 1.0)))
        out.append(1.0 / (theta / eps_minus + (1.0 - theta) / eps_plus))
    return out


@dataclass(eq=False)
class EllipticOperator:
    grid: object
    faces: list          # [ex (nx-1,ny,nz), ey, ez]
    diag: np.ndarray = None
    _work: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        shp = self.grid.shape
        self.faces = [np.ascontiguousarray(f, dtype=float) for f in self.faces]
        for axis, f in enumerate(self.faces):
            want = list(shp)
            want[axis] -= 1
            if f.shape != tuple(want):
                raise GridMismatchError(f"face array {axis} has shape {f.shape}, expected {tuple(want)}")
            if not np.all(f > 0):
                raise ValueError("face coefficients must be positive")
        if self.diag is None:
            self.diag = np.zeros(shp)
        else:
            self.diag = np.ascontiguousarray(self.diag, dtype=float)
            if np.any(self.diag < 0):
                raise ValueError("diagonal term must be nonnegative")
        hx, hy, hz = self.grid.spacing
        self._c = (1.0 / hx**2, 1.0 / hy**2, 1.0 / hz**2)

    def with_diag(self, diag):
        return EllipticOperator(self.grid, self.faces, diag)

    def apply(self, u, out=None):
        u = np.ascontiguousarray(u, dtype=float)
        if out is None:
            out = np.empty_like(u)
        return _apply_kernel(u, *self.faces, self.diag, *self._c, out)

    __call__ = apply

    def diagonal(self):
        d = np.array(self.diag)
        for axis, f in enumerate(self.faces):
            c = self._c[axis]
            lo = [slice(None)] * 3
            hi = [slice(None)] * 3
            lo[axis] = slice(0, -1)
            hi[axis] = slice(1, None)
            d[tuple(lo)] += c * f
            d[tuple(hi)] += c * f
        d[self.grid.boundary_mask()] = 1.0
        return d

    def dirichlet_form(self, u, v=None, weights=None):
        """V * sum_f w_f (Du)_f (Dv)_f with w = face coefficients unless given."""
        v = u if v is None else v
        weights = self.faces if weights is None else weights
        return weighted_form(self.grid, u, v, weights)


def weighted_form(grid, u, v, weights):
    total = 0.0
    for axis in range(3):
        h = grid.spacing[axis]
        du = np.diff(u, axis=axis) / h
        dv = du if v is u else np.diff(v, axis=axis) / h
        total += float(np.sum(weights[axis] * du * dv))
    return total * grid.cell_volume


def assemble(ls, eps_minus, eps_plus, diag=None, rule="nodal"):
    """Operator for -div(eps grad) with eps = eps_minus in the solute, eps_plus in the solvent.

    ``rule='nodal'`` takes node permittivities from the phi <= 0 tie-break
    and harmonic means on faces; ``rule='fraction'`` uses the solute fraction
    of each edge (see ``fraction_faces``).
    """
    if not (eps_minus > 0 and eps_plus > 0):
        raise ValueError("permittivities must be positive")
    if rule == "nodal":
        eps_node = np.where(ls.inside, float(eps_minus), float(eps_plus))
        faces = harmonic_faces(eps_node)
    elif rule == "fraction":
        faces = fraction_faces(ls.values, float(eps_minus), float(eps_plus))
    else:
        raise ValueError(f"unknown face rule {rule!r}; choose from {FACE_RULES}")
    diag = None if diag is None else getattr(diag, "values", diag)
    return EllipticOperator(ls.grid, faces, diag)


def constant_operator(grid, eps=1.0, diag=None):
    faces = []
    for axis in range(3):
        shp = list(grid.shape)
        shp[axis] -= 1
        faces.append(np.full(shp, float(eps)))
    return EllipticOperator(grid, faces, diag)


@dataclass
class CGResult:
    solution: np.ndarray
    iterations: int
    residual: float
    history: list

    def field(self, grid, tag=""):
        return ScalarField(grid, self.solution, tag)


def cg_solve(op, rhs, tol=1e-10, max_iter=5000, x0=None, raise_on_fail=True):
    """Jacobi-preconditioned CG for ``op.apply(x) = rhs`` on interior nodes.

    ``rhs`` entries on the boundary are ignored and the returned solution has
    zero boundary values.  Convergence is ``||b - Ax|| <= tol * ||b||``.
    """
    b = np.array(getattr(rhs, "values", rhs), dtype=float)
    bmask = op.grid.boundary_mask()
    b[bmask] = 0.0
    bnorm = float(np.linalg.norm(b))
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    x[bmask] = 0.0
    if bnorm == 0.0:
        return CGResult(np.zeros_like(b), 0, 0.0, [0.0])
    inv_d = 1.0 / op.diagonal()
    inv_d[bmask] = 0.0
    Ap = np.empty_like(b)
    r = b - op.apply(x, Ap) if x0 is not None else b.copy()
    z = inv_d * r
    p = z.copy()
    rz = float(np.vdot(r, z))
    res = float(np.linalg.norm(r)) / bnorm
    history = [res]
    it = 0
    while res > tol and it < max_iter:
        op.apply(p, Ap)
        alpha = rz / float(np.vdot(p, Ap))
        x += alpha * p
        r -= alpha * Ap
        it += 1
        res = float(np.linalg.norm(r)) / bnorm
        history.append(res)
        if res <= tol:
            break
        z = inv_d * r
        rz_new = float(np.vdot(r, z))
        p *= rz_new / rz
        p += z
        rz = rz_new
    if res > tol and raise_on_fail:
        raise ConvergenceError(f"CG did not reach {tol:g} in {max_iter} iterations", res, it)
    return CGResult(x, it, res, history)


def solve_dirichlet(op, boundary, source=None, tol=1e-10, max_iter=5000):
    """Solve A u = source in the interior with u = boundary on the box faces.

    ``boundary`` is a full array whose boundary entries hold the trace.
    Returns (u, CGResult).
    """
    g = np.zeros(op.grid.shape)
    bmask = op.grid.boundary_mask()
    g[bmask] = np.asarray(boundary)[bmask]
    rhs = -op.apply(g)
    if source is not None:
        rhs += source
    res = cg_solve(op, rhs, tol=tol, max_iter=max_iter)
    return res.solution + g, res
