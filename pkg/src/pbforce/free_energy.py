"""Solvation free energy by two independent formulas.

``energy_reformulated`` is the volume form

    E = -1/2 int eps |grad u|^2 - int_+ B(psi - p/2)
        + (eps_- - eps_+)/2 int_+ grad phi_hat_Gamma_inf . grad phi_hat_0 + W,

``energy_via_concentrations`` the Boltzmann-concentration form

    F = 1/2 sum Q_i (psi - phiC)(x_i) + int_+ [1/2 (psi - p) B'(psi - p/2) - B(psi - p/2)].
"""

import csv
import io
from dataclasses import asdict, dataclass

import numpy as np

from .elliptic import weighted_form
from .errors import GridMismatchError
from .geometry.grid import interpolate
from .ion_model import b_deriv, b_value
from .singular_fields import excess_faces

CSV_TAG = "volume_form"


@dataclass(frozen=True)
class EnergyBreakdown:
    gradient: float
    boltzmann: float
    mixed: float
    W: float

    @property
    def total(self):
        return self.gradient + self.boltzmann + self.mixed + self.W

    def as_dict(self):
        d = asdict(self)
        d["total"] = self.total
        return d

    def __str__(self):
        rows = [f"  {k:<10s} {v: .10e}" for k, v in self.as_dict().items()]
        return "EnergyBreakdown (kT)\n" + "\n".join(rows)


def _charge_values(sol, values):
    c = sol.system.charges
    return interpolate(sol.grid, values, c.positions, order=1)


def _check(sol):
    if sol.u.grid != sol.aux.grid:
        raise GridMismatchError("solution and auxiliary fields live on different grids")


def energy_reformulated(sol):
    _check(sol)
    aux = sol.aux
    op = aux.op
    ions = sol.system.ions
    grid = op.grid
    V = grid.cell_volume
    u = sol.u.values
    gradient = -0.5 * op.dirichlet_form(u)
    s = u + aux.base
    boltz = -V * float(np.sum(b_value(ions, s[aux.chi]))) if not ions.is_empty else 0.0
    excess = excess_faces(op, sol.system.eps_minus)
    mixed = -0.5 * weighted_form(grid, aux.phic + aux.w.values, aux.phic + aux.h0.values, excess)
    W = 0.5 * float(np.dot(sol.system.charges.charges, _charge_values(sol, aux.hinf.values)))
    return EnergyBreakdown(gradient, boltz, mixed, W)


def energy_via_concentrations(sol, ions=None):
    _check(sol)
    aux = sol.aux
    ions = sol.system.ions if ions is None else ions
    V = aux.grid.cell_volume
    charges = sol.system.charges.charges
    site = 0.5 * float(np.dot(charges, _charge_values(sol, sol.reaction_grid())))
    if ions.is_empty:
        return site
    chi = aux.chi
    s = (sol.u.values + aux.base)[chi]
    psi_minus_p = (sol.psi_grid() - aux.p.values)[chi]
    vol = V * float(np.sum(0.5 * psi_minus_p * b_deriv(ions, s) - b_value(ions, s)))
    return site + vol


def dual_discrepancy(sol):
    e = energy_reformulated(sol).total
    f = energy_via_concentrations(sol)
    return abs(e - f) / max(abs(e), 1e-300)


def energy_csv(breakdown, concentration_energy=None):
    """One header row and one data row, 17 significant digits."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    d = breakdown.as_dict()
    header = [f"{CSV_TAG}_{k}" for k in d]
    row = [f"{v:.17g}" for v in d.values()]
    if concentration_energy is not None:
        header += ["concentration_form_total", "relative_discrepancy"]
        rel = abs(d["total"] - concentration_energy) / max(abs(d["total"]), 1e-300)
        row += [f"{concentration_energy:.17g}", f"{rel:.17g}"]
    wr.writerow(header)
    wr.writerow(row)
    return buf.getvalue()
