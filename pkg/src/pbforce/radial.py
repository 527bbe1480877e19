"""Spherically symmetric reference solution: a charge at the center of a solute ball.

The solvent shell R < r < b is closed by a Dirichlet sphere at radius b;
the box oracle uses the equal-volume radius.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_bvp

from .ion_model import b_deriv, b_value


def equal_volume_radius(half_width):
    return 2.0 * half_width * (3.0 / (4.0 * np.pi)) ** (1.0 / 3.0)


@dataclass
class RadialSolution:
    R: float
    b: float
    Q: float
    eps_minus: float
    eps_plus: float
    sol: object   # scipy BVP solution on [R, b], y = (psi, psi')

    def psi_outer(self, r):
        return self.sol.sol(r)[0]

    @property
    def psi_at_R(self):
        return float(self.sol.sol(self.R)[0])

    @property
    def reaction_potential(self):
        """psi - phiC at the charge (constant throughout the solute)."""
        return self.psi_at_R - self.Q / (4.0 * np.pi * self.eps_minus * self.R)

    @property
    def inner_normal_derivative(self):
        return -self.Q / (4.0 * np.pi * self.eps_minus * self.R**2)

    @property
    def outer_normal_derivative(self):
        return float(self.sol.sol(self.R)[1])

    @property
    def flux(self):
        return -self.Q / (4.0 * np.pi * self.R**2)

    def energy(self, ions):
        """Concentration-form free energy 0.5 Q (psi - phiC)(0) + int [0.5 psi B'(psi) - B(psi)]."""
        def dens(r):
            s = self.psi_outer(r)
            return (0.5 * s * b_deriv(ions, s) - b_value(ions, s)) * 4.0 * np.pi * r * r
        vol = quad(dens, self.R, self.b, limit=200)[0] if not ions.is_empty else 0.0
        return 0.5 * self.Q * self.reaction_potential + vol

    def force_density(self, ions):
        """Boundary force on the sphere with zero outer data."""
        e = self.flux
        return -0.5 * (1.0 / self.eps_plus - 1.0 / self.eps_minus) * e * e + float(
            b_value(ions, self.psi_at_R))


def born_radial(Q, R, eps_minus, eps_plus, ions, b, n_mesh=400, tol=1e-10):
    """Solve eps_+ (psi'' + 2 psi'/r) = B'(psi) on [R, b], eps_+ psi'(R) = -Q/(4 pi R^2), psi(b) = 0."""
    flux = -Q / (4.0 * np.pi * R * R)

    def rhs(r, y):
        return np.vstack([y[1], b_deriv(ions, y[0]) / eps_plus - 2.0 * y[1] / r])

    def bc(ya, yb):
        return np.array([eps_plus * ya[1] - flux, yb[0]])

    r = np.linspace(R, b, n_mesh)
    # zero-salt profile as the starting guess
    c = Q / (4.0 * np.pi * eps_plus)
    guess = np.vstack([c * (1.0 / r - 1.0 / b), -c / r**2])
    sol = solve_bvp(rhs, bc, r, guess, tol=tol, max_nodes=200000)
    if not sol.success:
        raise RuntimeError(f"radial BVP failed: {sol.message}")
    return RadialSolution(R, b, Q, eps_minus, eps_plus, sol)
