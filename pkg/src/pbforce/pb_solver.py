"""Damped Newton solve of the dielectric-boundary PB equation.

Unknown u = psi - phi_hat_Gamma_inf (zero trace).  Discretely u minimizes

    I[u] = 1/2 a(u, u) + V sum_{solvent nodes} B(u + base),
    base = phiC + w - p/2,

and the Newton residual is R(u) = A u + chi B'(u + base).
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .elliptic import assemble, cg_solve
from .errors import ConvergenceError, LineSearchError, StagnationError
from .geometry.grid import ScalarField, interpolate
from .ion_model import b_deriv, b_deriv2, b_value
from .singular_fields import (coulomb_on_grid, solve_hat_phi, solve_hat_phi_Gamma_infty,
                              solve_phi_Gamma_infty)
from .system import SolvationSystem  # noqa: F401  (re-export)

log = logging.getLogger("pbforce.pb")

MAX_HALVINGS = 30
STAGNATION_STEP = 1e-14


@dataclass(eq=False)
class AuxiliaryFields:
    """Gamma-dependent and Gamma-independent linear solves shared by energy and force code."""

    ls: object
    op: object
    phic: np.ndarray          # Coulomb field at the nodes (0 on a charge node)
    h0: ScalarField           # phi_hat_0 - phiC
    hinf: ScalarField         # phi_hat_inf - phiC
    p: ScalarField            # phi_Gamma_inf
    w: ScalarField            # phi_hat_Gamma_inf - phiC
    chi: np.ndarray           # interior solvent nodes
    base: np.ndarray          # phiC + w - p/2 on chi, 0 elsewhere

    @property
    def grid(self):
        return self.ls.grid


def compute_auxiliary(sys, ls, tol=1e-10, reuse=None):
    """All auxiliary fields for ``sys`` on ``ls``.

    ``reuse`` may carry Gamma-independent fields (h0, hinf) from another
    level set on the same grid.
    """
    ls.check_boundary_clearance()
    sys.charges.check_placement(ls)
    grid = ls.grid
    op = assemble(ls, sys.eps_minus, sys.eps_plus, rule=sys.face_rule)
    phic = coulomb_on_grid(sys.charges, sys.eps_minus, grid)
    if reuse is not None:
        grid.check_same(reuse.grid)
        h0, hinf = reuse.h0, reuse.hinf
    else:
        h0 = solve_hat_phi(sys.charges, sys.eps_minus, None, grid, tol=tol)
        hinf = h0 if sys.boundary is None else solve_hat_phi(sys.charges, sys.eps_minus,
                                                             sys.boundary, grid, tol=tol)
    p = solve_phi_Gamma_infty(sys, ls, op=op, tol=tol)
    w = solve_hat_phi_Gamma_infty(sys, ls, op=op, phic=phic, tol=tol)
    chi = ls.outside & ~grid.boundary_mask()
    base = phic + w.values - (0.5 * p.values if sys.shift else 0.0)
    base = np.where(chi, base, 0.0)
    return AuxiliaryFields(ls, op, phic, h0, hinf, p, w, chi, base)


@dataclass(eq=False)
class PBSolution:
    system: object
    aux: AuxiliaryFields
    u: ScalarField
    iterations: int
    residual: float
    history: list = field(default_factory=list)

    @property
    def ls(self):
        return self.aux.ls

    @property
    def grid(self):
        return self.aux.grid

    @property
    def energies(self):
        """I[u_k] along accepted iterates (including the start)."""
        return [rec["energy"] for rec in self.history]

    @property
    def boltzmann_argument(self):
        """psi - phi_Gamma_inf/2 on solvent nodes (0 elsewhere)."""
        return np.where(self.aux.chi, self.u.values + self.aux.base, 0.0)

    def reaction_grid(self):
        """psi - phiC at the nodes: u + w."""
        return self.u.values + self.aux.w.values

    def reaction_potential(self, x):
        """(psi - phiC)(x) by trilinear interpolation of the regular part."""
        return interpolate(self.grid, self.reaction_grid(), np.atleast_2d(x), order=1)

    def psi_grid(self):
        """Full potential at nodes; nodes on a charge hold the regular part only."""
        return self.reaction_grid() + self.aux.phic


def residual_vector(op, aux, ions, u):
    r = op.apply(u)
    r += np.where(aux.chi, b_deriv(ions, u + aux.base), 0.0)
    return r


def functional_I(op, aux, ions, u):
    a = float(np.vdot(u, op.apply(u))) * op.grid.cell_volume
    s = u + aux.base
    bsum = float(np.sum(b_value(ions, s[aux.chi]))) if not ions.is_empty else 0.0
    return 0.5 * a + op.grid.cell_volume * bsum


def _norm(r):
    return float(np.max(np.abs(r)))


def solve_pb(sys, ls, tol=1e-9, max_newton=50, aux=None, aux_tol=1e-10):
    """Damped Newton for the PB equation; returns a PBSolution."""
    if aux is None:
        aux = compute_auxiliary(sys, ls, tol=aux_tol)
    op = aux.op
    ions = sys.ions
    V = op.grid.cell_volume
    u = np.zeros(op.grid.shape)
    R = residual_vector(op, aux, ions, u)
    r0 = _norm(R)
    energy = functional_I(op, aux, ions, u)
    history = [dict(iter=0, residual=1.0 if r0 > 0 else 0.0, energy=energy, damping=0.0, cg=0)]
    log.info("newton iter=0 residual=%.6e energy=%.17g", history[0]["residual"], energy)
    if r0 == 0.0:
        return PBSolution(sys, aux, ScalarField(op.grid, u, "u"), 0, 0.0, history)
    rel = 1.0
    for it in range(1, max_newton + 1):
        s = u + aux.base
        jac = op.with_diag(np.where(aux.chi, b_deriv2(ions, s), 0.0))
        cg_tol = max(1e-12, min(1e-2, 0.1 * rel))
        step = cg_solve(jac, -R, tol=cg_tol, max_iter=20000)
        du = step.solution
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = u + lam * du
            e_trial = functional_I(op, aux, ions, trial)
            if e_trial <= energy + 1e-13 * abs(energy):
                break
            lam *= 0.5
        else:
            raise LineSearchError(f"no energy decrease after {MAX_HALVINGS} halvings", rel, it)
        u = trial
        energy = e_trial
        R = residual_vector(op, aux, ions, u)
        rel = _norm(R) / r0
        step_norm = lam * _norm(du)
        history.append(dict(iter=it, residual=rel, energy=energy, damping=lam, cg=step.iterations))
        log.info("newton iter=%d residual=%.6e energy=%.17g damping=%.4g cg=%d",
                 it, rel, energy, lam, step.iterations)
        if rel <= tol:
            return PBSolution(sys, aux, ScalarField(op.grid, u, "u"), it, rel, history)
        if step_norm < STAGNATION_STEP:
            raise StagnationError(f"Newton stagnated at residual {rel:.3e}", rel, it)
    raise ConvergenceError(f"Newton did not converge in {max_newton} iterations", rel, max_newton)


def pb_residual(sol):
    """Max-norm residual of the discrete equation, relative to the residual at u = 0."""
    aux = sol.aux
    ions = sol.system.ions
    r0 = _norm(residual_vector(aux.op, aux, ions, np.zeros(sol.grid.shape)))
    r = _norm(residual_vector(aux.op, aux, ions, sol.u.values))
    return 0.0 if r0 == 0.0 else r / r0


def interface_flux_jump(sol, mesh=None, model="linear"):
    """Per-sample relative jump |[eps d_n psi]| / max(|eps_+ d_n psi+|, |eps_- d_n psi-|)."""
    from .boundary_force import extract_traces
    from .geometry import extract_interface

    mesh = extract_interface(sol.ls) if mesh is None else mesh
    return extract_traces(sol, mesh, model=model).jump_defect()


def format_log(sol):
    """Structured text log: one ``key=value`` line per Newton iterate."""
    lines = []
    for rec in sol.history:
        lines.append("iter={iter} residual={residual:.17g} energy={energy:.17g} "
                     "damping={damping:.6g} cg={cg}".format(**rec))
    return "\n".join(lines) + "\n"


def random_perturbation(grid, rng, n_modes=4):
    """Smooth zero-trace field: product of random low sine modes, scaled to max norm 1."""
    axes = grid.axes()
    lo = np.asarray(grid.lower)
    L = np.asarray(grid.upper) - lo
    eta = np.zeros(grid.shape)
    for _ in range(n_modes):
        k = rng.integers(1, 4, size=3)
        fac = [np.sin(np.pi * k[a] * (axes[a] - lo[a]) / L[a]) for a in range(3)]
        eta += rng.normal() * fac[0][:, None, None] * fac[1][None, :, None] * fac[2][None, None, :]
    eta[grid.boundary_mask()] = 0.0
    return eta / np.max(np.abs(eta))


@dataclass
class MaximizationReport:
    worst_margin: float
    margins: np.ndarray
    passed: bool


def maximization_check(sol, n_perturbations=20, amplitude=0.1, steps=(-0.1, -0.05, 0.05, 0.1),
                       seed=0, tol=1e-8):
    """Check G[psi + s eta] <= G[psi] for random smooth eta.

    G = -I + const, so the margin G[psi + s eta] - G[psi] is computed in
    expanded form  -(s a(u, eta) + s^2/2 a(eta, eta) + V sum chi (B(s_u + s eta) - B(s_u))).
    """
    aux = sol.aux
    op = aux.op
    ions = sol.system.ions
    V = op.grid.cell_volume
    u = sol.u.values
    su = u + aux.base
    Au = op.apply(u)
    rng = np.random.default_rng(seed)
    margins = []
    for _ in range(n_perturbations):
        eta = amplitude * random_perturbation(op.grid, rng)
        a_ue = V * float(np.vdot(Au, eta))
        a_ee = V * float(np.vdot(eta, op.apply(eta)))
        for s in steps:
            db = 0.0
            if not ions.is_empty:
                db = V * float(np.sum(b_value(ions, su[aux.chi] + s * eta[aux.chi])
                                      - b_value(ions, su[aux.chi])))
            margins.append(-(s * a_ue + 0.5 * s * s * a_ee + db))
    margins = np.array(margins)
    worst = float(margins.max()) if len(margins) else 0.0
    return MaximizationReport(worst, margins, worst <= tol)
