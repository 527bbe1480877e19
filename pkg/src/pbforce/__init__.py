"""Dielectric-boundary Poisson-Boltzmann solver, solvation energy and boundary force."""

__version__ = "0.1.0"
