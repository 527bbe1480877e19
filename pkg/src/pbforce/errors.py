"""Exception types raised by pbforce."""


class PBForceError(Exception):
    """Base class for all library errors."""


class GeometryError(PBForceError):
    """Invalid or degenerate geometry (clearance, empty interface, tube violation)."""


class GridMismatchError(PBForceError):
    """Fields or level sets defined on different grids were combined."""


class SaturationError(PBForceError):
    """An exponent in the Boltzmann factor exceeded the overflow guard."""


class NeutralityError(PBForceError):
    """Ionic species violate bulk charge neutrality."""


class SingularityError(PBForceError):
    """Coulomb field evaluated on top of a point charge."""


class ConvergenceError(PBForceError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class LineSearchError(ConvergenceError):
    """Damped Newton could not find an energy-decreasing step."""


class StagnationError(ConvergenceError):
    """Newton step collapsed while the residual is still above tolerance."""


class ThinRegionError(PBForceError):
    """Too few grid nodes on one side of an interface sample for a trace fit."""

    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class ConfigError(PBForceError):
    """Malformed run configuration."""
