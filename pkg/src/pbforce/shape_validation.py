"""Finite-difference check of the boundary force against energies of deformed interfaces."""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .boundary_force import compute_force
from .errors import ConvergenceError, GeometryError
from .free_energy import energy_reformulated
from .geometry.flow import flow_map
from .geometry.interface import extract_interface
from .geometry.levelset import LevelSet, redistance
from .pb_solver import compute_auxiliary, solve_pb

BOX_CLEARANCE_CELLS = 3.0     # solvent-side trace fits reach 3h beyond the interface


def _box_shell(grid, cells=int(BOX_CLEARANCE_CELLS)):
    """Nodes within ``cells`` grid steps of the box boundary."""
    idx = np.indices(grid.shape)
    n = np.array(grid.shape).reshape(3, 1, 1, 1)
    return np.any((idx <= cells) | (idx >= n - 1 - cells), axis=0)


def transported_levelset(ls, V, t, redistance_tube=True):
    """Level set of T_t(Gamma): phi_t(x) = phi(T_{-t}(x)), then redistanced near the interface.

    Only nodes that V can reach are flowed; elsewhere T_{-t} is the identity.
    """
    if t == 0.0:
        return ls
    grid = ls.grid
    reach = V.support_radius
    if np.isfinite(reach):
        active = np.abs(ls.values) < reach + 2.0 * grid.h
    else:
        active = np.ones(grid.shape, dtype=bool)
    active &= ~grid.boundary_mask()
    pts = grid.points()[active]
    moved = flow_map(V, pts, -t)
    values = np.array(ls.values)
    values[active] = ls(moved)
    new = LevelSet(grid, values)
    if np.any(values[_box_shell(grid)] <= 0.0):
        raise GeometryError(f"transported interface at t = {t} comes within "
                            f"{BOX_CLEARANCE_CELLS:g} cells of the box")
    return redistance(new) if redistance_tube else new


@dataclass(eq=False)
class VariationExperiment:
    system: object
    ls: object
    V: object
    t_values: list                      # positive step sizes, largest first
    name: str = "V"
    model: str = "linear"
    energies: dict = field(default_factory=dict)
    fd: dict = field(default_factory=dict)
    richardson: float = None
    formula: float = None
    discrepancy: float = None
    base_energy: float = None

    def table(self):
        rows = []
        for t in self.t_values:
            rows.append(dict(t=t, E_plus=self.energies[t], E_minus=self.energies[-t], fd=self.fd[t],
                             formula=self.formula,
                             discrepancy=abs(self.fd[t] - self.formula) / max(abs(self.fd[t]), 1e-300)))
        return rows

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["t", "E_plus", "E_minus", "FD", "formula", "discrepancy"])
        for r in self.table():
            wr.writerow([f"{r[k]:.17g}" for k in ("t", "E_plus", "E_minus", "fd", "formula",
                                                  "discrepancy")])
        if self.richardson is not None:
            wr.writerow(["richardson", "", "", f"{self.richardson:.17g}", f"{self.formula:.17g}",
                         f"{self.discrepancy:.17g}"])
        return buf.getvalue()


def energy_of(system, ls, reuse=None, tol=1e-9):
    aux = compute_auxiliary(system, ls, reuse=reuse)
    sol = solve_pb(system, ls, tol=tol, aux=aux)
    return energy_reformulated(sol).total, sol


def fd_shape_derivative(exp, base_solution=None, tol=1e-9):
    """Central differences (E(t) - E(-t)) / 2t for each t, Richardson extrapolation, and the formula value.

    Fills and returns ``exp``.
    """
    if len(exp.t_values) < 2:
        raise ValueError("need at least two symmetric t pairs")
    ts = sorted(exp.t_values, reverse=True)
    exp.t_values = ts
    if base_solution is None:
        exp.base_energy, base_solution = energy_of(exp.system, exp.ls, tol=tol)
    else:
        exp.base_energy = energy_reformulated(base_solution).total
    reuse = base_solution.aux
    for t in ts:
        for tt in (t, -t):
            ls_t = transported_levelset(exp.ls, exp.V, tt)
            try:
                exp.energies[tt], _ = energy_of(exp.system, ls_t, reuse=reuse, tol=tol)
            except ConvergenceError as exc:
                raise ConvergenceError(f"PB solve failed at t = {tt}: {exc}", exc.residual,
                                       exc.iterations) from exc
        exp.fd[t] = (exp.energies[t] - exp.energies[-t]) / (2.0 * t)
    t1, t2 = ts[0], ts[1]
    ratio = t1 / t2
    exp.richardson = (ratio**2 * exp.fd[t2] - exp.fd[t1]) / (ratio**2 - 1.0)
    mesh = extract_interface(exp.ls)
    report, _ = compute_force(base_solution, mesh, model=exp.model)
    exp.formula = report.add_variation(exp.name, exp.V)
    exp.discrepancy = abs(exp.richardson - exp.formula) / max(abs(exp.richardson), 1e-300)
    return exp
