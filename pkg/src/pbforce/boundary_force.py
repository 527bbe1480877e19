"""Dielectric boundary force density at interface samples.

One-sided traces come from least-squares fits of the regular part of each
field to grid nodes on one side of the interface, at normal distance between
1h and 3h from the sample.  The fit model is quadratic in the local frame
(normal coordinate d, tangential s1, s2); the singular Coulomb part is added
back analytically.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ThinRegionError
from .ion_model import b_value
from .singular_fields import coulomb_gradient, coulomb_potential

NEAR, FAR = 1.0, 3.0       # slab of usable normal distances, in units of h
LATERAL = 2.5              # lateral radius, in units of h
MIN_NODES_LINEAR = 4
MIN_NODES_QUADRATIC = 16
QUAD_COND = 1e-3
CHUNK = 2000
CSV_TAG_FULL = "general"
CSV_TAG_HOMOGENEOUS = "homogeneous"

_OFF = np.stack(np.meshgrid(*[np.arange(-3, 4)] * 3, indexing="ij"), axis=-1).reshape(-1, 3)


def local_frame(n):
    """Two unit tangents completing ``n`` to a right-handed orthonormal frame."""
    n = np.asarray(n, dtype=float)
    helper = np.where(np.abs(n[:, :1]) < 0.9, np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))
    t1 = np.cross(n, helper)
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(n, t1)
    return t1, t2


@dataclass
class OneSidedFit:
    value: np.ndarray        # (N,)
    normal_deriv: np.ndarray  # (N,)
    tangential: np.ndarray   # (N, 3) gradient projected on the tangent plane
    count: np.ndarray        # nodes used per sample


def fit_one_sided(ls, fields, points, normals, side, model="linear", far=FAR):
    """Fit each node array in ``fields`` on one side (+1 solvent, -1 solute) of the samples.

    ``model='linear'`` fits a + b d + c s1 + e s2 (at least 4 nodes);
    ``model='quadratic'`` adds all second-order terms and falls back to the
    linear model at samples whose nodes do not determine them (e.g. normals
    along a grid axis, where the slab holds only two node layers).
    Returns a list of OneSidedFit, one per field.
    """
    grid = ls.grid
    h = grid.h
    spacing = np.asarray(grid.spacing)
    lower = np.asarray(grid.lower)
    shape = np.asarray(grid.shape)
    side_mask = ls.outside if side > 0 else ls.inside
    N = len(points)
    t1_all, t2_all = local_frame(normals)
    out_val = np.zeros((len(fields), N))
    out_dn = np.zeros((len(fields), N))
    out_tan = np.zeros((len(fields), N, 3))
    counts = np.zeros(N, dtype=int)
    for start in range(0, N, CHUNK):
        sl = slice(start, min(start + CHUNK, N))
        X = points[sl]
        n = normals[sl]
        t1, t2 = t1_all[sl], t2_all[sl]
        base = np.rint((X - lower) / spacing).astype(np.int64)
        ind = base[:, None, :] + _OFF[None, :, :]
        valid = np.all((ind >= 0) & (ind < shape), axis=-1)
        ind = np.clip(ind, 0, shape - 1)
        pos = lower + ind * spacing
        rel = (pos - X[:, None, :]) / h
        d = np.einsum("nki,ni->nk", rel, n)
        s1 = np.einsum("nki,ni->nk", rel, t1)
        s2 = np.einsum("nki,ni->nk", rel, t2)
        sd = side * d
        use = valid & (sd >= NEAR) & (sd <= far) & (s1 * s1 + s2 * s2 <= LATERAL**2)
        use &= side_mask[ind[..., 0], ind[..., 1], ind[..., 2]]
        cnt = use.sum(axis=1)
        counts[sl] = cnt
        bad = np.flatnonzero(cnt < MIN_NODES_LINEAR)
        if bad.size:
            i = bad[0]
            raise ThinRegionError(
                f"only {cnt[i]} usable nodes on the {'solvent' if side > 0 else 'solute'} side "
                f"of sample {start + i} at {X[i].tolist()}", sample=start + i)
        one = np.ones_like(d)
        A = np.stack([one, d, s1, s2], axis=-1) * use[..., None]
        sol_op = _least_squares_operator(A)
        if model == "quadratic":
            A2 = np.stack([one, d, s1, s2, d * d, s1 * s1, s2 * s2, d * s1, d * s2, s1 * s2],
                          axis=-1) * use[..., None]
            M2 = np.einsum("nki,nkj->nij", A2, A2)
            ok = (cnt >= MIN_NODES_QUADRATIC) & (np.linalg.eigvalsh(M2)[:, 0] > QUAD_COND * cnt)
            if ok.any():
                op2 = _least_squares_operator(A2[ok])[:, :4]
                sol_op[ok] = op2
        elif model != "linear":
            raise ValueError(f"unknown trace model {model!r}")
        for fi, f in enumerate(fields):
            vals = f[ind[..., 0], ind[..., 1], ind[..., 2]] * use
            coef = np.einsum("nik,nk->ni", sol_op, vals)
            out_val[fi, sl] = coef[:, 0]
            out_dn[fi, sl] = coef[:, 1] / h
            out_tan[fi, sl] = (coef[:, 2:3] * t1 + coef[:, 3:4] * t2) / h
    return [OneSidedFit(out_val[i], out_dn[i], out_tan[i], counts) for i in range(len(fields))]


def _least_squares_operator(A):
    """(A^T A)^{-1} A^T per sample; rows of A for unused nodes are zero."""
    M = np.einsum("nki,nkj->nij", A, A)
    return np.linalg.solve(M, np.swapaxes(A, 1, 2))


@dataclass
class SurfaceTraces:
    psi_plus: np.ndarray
    psi_minus: np.ndarray
    dn_plus: np.ndarray
    dn_minus: np.ndarray
    flux: np.ndarray            # 0.5 (eps_+ dn_plus + eps_- dn_minus)
    grad_t_psi: np.ndarray      # (N, 3), averaged over both sides
    p_plus: np.ndarray
    flux_p: np.ndarray
    grad_t_p: np.ndarray
    boltz_arg: np.ndarray       # psi_plus - p_plus/2 (or psi_plus without the shift)
    eps_minus: float
    eps_plus: float

    def flux_plus(self):
        return self.eps_plus * self.dn_plus

    def flux_minus(self):
        return self.eps_minus * self.dn_minus

    def jump_defect(self):
        fp, fm = self.flux_plus(), self.flux_minus()
        return np.abs(fp - fm) / np.maximum(np.maximum(np.abs(fp), np.abs(fm)), 1e-300)


def extract_traces(sol, mesh, model="linear"):
    """One-sided traces of psi and phi_Gamma_inf at the mesh samples.

    Solute side: fit psi - phiC.  Solvent side: fit psi - (eps_-/eps_+) phiC,
    which removes the 1/r curvature of the screened charge field.  The
    subtracted parts are added back analytically.
    """
    aux = sol.aux
    sys = sol.system
    ls = aux.ls
    X, n = mesh.points, mesh.normals
    reaction = sol.reaction_grid()
    scale = sys.eps_minus / sys.eps_plus
    outer = reaction + (1.0 - scale) * aux.phic
    zero_p = not np.any(aux.p.values)
    plus = fit_one_sided(ls, [outer] if zero_p else [outer, aux.p.values], X, n, +1, model)
    minus = fit_one_sided(ls, [reaction] if zero_p else [reaction, aux.p.values], X, n, -1, model)
    c_val = coulomb_potential(sys.charges, sys.eps_minus, X)
    c_grad = coulomb_gradient(sys.charges, sys.eps_minus, X)
    c_dn = np.sum(c_grad * n, axis=1)
    c_tan = c_grad - c_dn[:, None] * n
    psi_p = plus[0].value + scale * c_val
    psi_m = minus[0].value + c_val
    dn_p = plus[0].normal_deriv + scale * c_dn
    dn_m = minus[0].normal_deriv + c_dn
    tan = 0.5 * (plus[0].tangential + scale * c_tan + minus[0].tangential + c_tan)
    flux = 0.5 * (sys.eps_plus * dn_p + sys.eps_minus * dn_m)
    if zero_p:
        zeros = np.zeros(len(X))
        p_plus, flux_p, tan_p = zeros, zeros, np.zeros_like(X)
    else:
        p_plus = plus[1].value
        flux_p = 0.5 * (sys.eps_plus * plus[1].normal_deriv + sys.eps_minus * minus[1].normal_deriv)
        tan_p = 0.5 * (plus[1].tangential + minus[1].tangential)
    arg = psi_p - 0.5 * p_plus if sys.shift else psi_p
    return SurfaceTraces(psi_p, psi_m, dn_p, dn_m, flux, tan, p_plus, flux_p, tan_p, arg,
                         sys.eps_minus, sys.eps_plus)


@dataclass
class ForceDensity:
    q: np.ndarray
    normal_term: np.ndarray
    tangential_term: np.ndarray
    boltzmann_term: np.ndarray


def force_density(traces, ions, eps_minus=None, eps_plus=None, flux=None):
    """General formula, valid for nonzero outer data.

    ``flux`` overrides the common normal flux (e.g. the solvent-side value).
    """
    em = traces.eps_minus if eps_minus is None else eps_minus
    ep = traces.eps_plus if eps_plus is None else eps_plus
    F = traces.flux if flux is None else flux
    normal = -0.5 * (1.0 / ep - 1.0 / em) * (F * F - F * traces.flux_p)
    g = traces.grad_t_psi
    tangential = 0.5 * (ep - em) * (np.sum(g * g, axis=1) - np.sum(g * traces.grad_t_p, axis=1))
    boltz = b_value(ions, traces.boltz_arg)
    return ForceDensity(normal + tangential + boltz, normal, tangential, boltz)


def force_density_homogeneous(traces, ions, eps_minus=None, eps_plus=None):
    """Reduced formula for zero outer data: every term is a nonnegative product when eps_+ > eps_-."""
    em = traces.eps_minus if eps_minus is None else eps_minus
    ep = traces.eps_plus if eps_plus is None else eps_plus
    F = traces.flux
    g = traces.grad_t_psi
    normal = 0.5 * (1.0 / em - 1.0 / ep) * F * F
    tangential = 0.5 * (ep - em) * np.sum(g * g, axis=1)
    boltz = b_value(ions, traces.psi_plus)
    return ForceDensity(normal + tangential + boltz, normal, tangential, boltz)


def integrate_variation(q, V, mesh):
    """sum over samples of q (V . n) dS."""
    vn = np.sum(V(mesh.points) * mesh.normals, axis=1)
    return float(np.sum(np.asarray(q) * vn * mesh.weights))


@dataclass
class ForceReport:
    mesh: object
    density: ForceDensity
    homogeneous: bool
    variations: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def q(self):
        return self.density.q

    @property
    def tag(self):
        return CSV_TAG_HOMOGENEOUS if self.homogeneous else CSV_TAG_FULL

    def add_variation(self, name, V):
        self.variations[name] = integrate_variation(self.q, V, self.mesh)
        return self.variations[name]

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        t = self.tag
        wr.writerow(["x", "y", "z", "nx", "ny", "nz", "dS", f"{t}_q", f"{t}_normal_term",
                     f"{t}_tangential_term", f"{t}_boltzmann_term"])
        d = self.density
        for i in range(len(d.q)):
            vals = list(self.mesh.points[i]) + list(self.mesh.normals[i]) + [
                self.mesh.weights[i], d.q[i], d.normal_term[i], d.tangential_term[i],
                d.boltzmann_term[i]]
            wr.writerow([f"{v:.17g}" for v in vals])
        return buf.getvalue()

    def variations_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["velocity_field", f"{self.tag}_variation"])
        for k, v in self.variations.items():
            wr.writerow([k, f"{v:.17g}"])
        return buf.getvalue()


def compute_force(sol, mesh, model="linear"):
    """Traces, density and report; uses the reduced formula when the outer data vanish."""
    traces = extract_traces(sol, mesh, model=model)
    homogeneous = sol.system.zero_trace
    dens = (force_density_homogeneous if homogeneous else force_density)(traces, sol.system.ions)
    rep = ForceReport(mesh, dens, homogeneous, metadata=dict(grid=str(sol.grid)))
    return rep, traces
