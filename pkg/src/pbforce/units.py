"""Conversion between physical inputs and the internal unit system.

Internally energies are in kT, potentials in kT/e, lengths in angstrom and
charges in units of e, so beta = 1.  The vacuum permittivity is folded into
the dielectric coefficients: eps_internal = eps_r / (4 pi l_B), where l_B is
the vacuum Bjerrum length at temperature T.
"""

import math

from scipy import constants

ANGSTROM = 1e-10
DEFAULT_TEMPERATURE = 298.15


def bjerrum_length(temperature=DEFAULT_TEMPERATURE):
    """Vacuum Bjerrum length e^2 / (4 pi eps0 kT) in angstrom."""
    kT = constants.k * temperature
    return constants.e**2 / (4.0 * math.pi * constants.epsilon_0 * kT) / ANGSTROM


def vacuum_permittivity(temperature=DEFAULT_TEMPERATURE):
    """eps0 in internal units, e^2 / (kT * angstrom)."""
    return 1.0 / (4.0 * math.pi * bjerrum_length(temperature))


def permittivity(eps_r, temperature=DEFAULT_TEMPERATURE):
    """Relative permittivity -> internal permittivity."""
    return eps_r * vacuum_permittivity(temperature)


def molar_to_number_density(molar):
    """mol/L -> ions per cubic angstrom."""
    return molar * constants.N_A * 1e3 * ANGSTROM**3


def debye_length(eps_r, species, temperature=DEFAULT_TEMPERATURE):
    """Debye length in angstrom for ``species`` = [(valence, molar), ...]."""
    eps = permittivity(eps_r, temperature)
    strength = sum(z * z * molar_to_number_density(c) for z, c in species)
    return math.sqrt(eps / strength)
