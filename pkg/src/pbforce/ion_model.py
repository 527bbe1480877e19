"""Mobile ions: the Boltzmann function B and its derivatives.

B(s) = (1/beta) * sum_j c_j (exp(-beta q_j s) - 1), strictly convex with
its minimum B(0) = 0 when the bulk solution is neutral.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, NeutralityError, SaturationError
from .geometry.grid import ScalarField

SATURATION = 500.0
NEUTRALITY_RTOL = 1e-12


@dataclass(frozen=True)
class IonicSpecies:
    charge: float          # valence, in units of e
    concentration: float   # bulk number density, 1/length^3

    def __post_init__(self):
        if self.charge == 0:
            raise ValueError("ionic species must be charged")
        if not self.concentration > 0:
            raise ValueError("bulk concentration must be positive")


class IonModel:
    def __init__(self, species, beta=1.0, check=True):
        self.species = tuple(species)
        self.beta = float(beta)
        self.q = np.array([s.charge for s in self.species], dtype=float)
        self.c = np.array([s.concentration for s in self.species], dtype=float)
        if check:
            self.check_neutrality()

    @classmethod
    def symmetric(cls, concentration, valence=1.0, beta=1.0):
        return cls([IonicSpecies(valence, concentration), IonicSpecies(-valence, concentration)], beta)

    @classmethod
    def salt_free(cls):
        """Empty model: B is identically zero."""
        m = cls.__new__(cls)
        m.species, m.beta = (), 1.0
        m.q = np.zeros(0)
        m.c = np.zeros(0)
        return m

    @property
    def is_empty(self):
        return len(self.species) == 0

    def net_charge(self):
        return float(np.dot(self.q, self.c))

    def check_neutrality(self):
        if len(self.species) < 2 or not (np.any(self.q > 0) and np.any(self.q < 0)):
            raise NeutralityError("need at least one cation and one anion")
        scale = float(np.dot(np.abs(self.q), self.c))
        if abs(self.net_charge()) > NEUTRALITY_RTOL * scale:
            raise NeutralityError(
                f"bulk solution violates charge neutrality: sum q_j c_j = {self.net_charge():.6g}")

    def debye_kappa2(self, permittivity):
        """kappa^2 = beta sum q_j^2 c_j / eps."""
        return self.beta * float(np.dot(self.q**2, self.c)) / permittivity

    def _exponent(self, s):
        s = np.asarray(s, dtype=float)
        arg = -self.beta * np.multiply.outer(s, self.q)
        if arg.size and np.max(np.abs(arg)) > SATURATION:
            raise SaturationError(
                f"|beta q s| = {np.max(np.abs(arg)):.4g} exceeds {SATURATION}; potential too large")
        return arg


def b_value(m, s):
    if m.is_empty:
        return np.zeros(np.shape(s))
    return np.expm1(m._exponent(s)) @ m.c / m.beta


def b_deriv(m, s):
    """B'(s) = -sum q_j c_j exp(-beta q_j s)."""
    if m.is_empty:
        return np.zeros(np.shape(s))
    return -(np.exp(m._exponent(s)) @ (m.q * m.c))


def b_deriv2(m, s):
    if m.is_empty:
        return np.zeros(np.shape(s))
    return m.beta * (np.exp(m._exponent(s)) @ (m.q**2 * m.c))


def equilibrium_concentrations(m, psi, phi_inf, ls, shift=True):
    """Boltzmann concentrations c_j exp(-beta q_j (psi - phi_inf/2)) in the solvent, 0 in the solute.

    ``psi`` and ``phi_inf`` are full-potential node fields (arrays or
    ScalarField). ``shift=False`` drops the phi_inf/2 term (non-default
    comparison mode).
    """
    for f in (psi, phi_inf):
        if isinstance(f, ScalarField):
            ls.grid.check_same(f.grid)
    psi_v = np.asarray(getattr(psi, "values", psi))
    inf_v = np.asarray(getattr(phi_inf, "values", phi_inf))
    if psi_v.shape != ls.grid.shape or inf_v.shape != ls.grid.shape:
        raise GridMismatchError("fields and level set have different shapes")
    arg = np.where(ls.outside, psi_v - (0.5 * inf_v if shift else 0.0), 0.0)
    ex = np.exp(m._exponent(arg))
    out = []
    for j, sp in enumerate(m.species):
        cj = np.where(ls.outside, sp.concentration * ex[..., j], 0.0)
        out.append(ScalarField(ls.grid, cj, tag=f"c_{j}"))
    return out
