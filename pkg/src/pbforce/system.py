"""The solvation system: charges, dielectric pair, ions and outer boundary data."""

from dataclasses import dataclass

import numpy as np

from .ion_model import IonModel
from .singular_fields import PointChargeSet


class ConstantTrace:
    """phi_inf equal to a constant on the box faces."""

    def __init__(self, value):
        self.value = float(value)

    def __call__(self, x):
        return np.full(np.shape(x)[:-1], self.value)

    def __repr__(self):
        return f"ConstantTrace({self.value})"


class LinearTrace:
    """phi_inf(x) = a . x + b."""

    def __init__(self, a, b=0.0):
        self.a = np.asarray(a, dtype=float)
        self.b = float(b)

    def __call__(self, x):
        return np.asarray(x) @ self.a + self.b

    def __repr__(self):
        return f"LinearTrace({self.a.tolist()}, {self.b})"


@dataclass(frozen=True, eq=False)
class SolvationSystem:
    """``boundary`` is None for phi_inf = 0, otherwise a callable of points.

    ``shift=False`` removes the phi_inf/2 shift inside B (non-default comparison
    mode).  ``allow_equal_eps`` admits eps_minus == eps_plus for tests.
    """

    charges: PointChargeSet
    eps_minus: float
    eps_plus: float
    ions: IonModel
    boundary: object = None
    shift: bool = True
    face_rule: str = "fraction"
    allow_equal_eps: bool = False

    def __post_init__(self):
        if not (self.eps_minus > 0 and self.eps_plus > 0):
            raise ValueError("permittivities must be positive")
        if self.eps_minus == self.eps_plus and not self.allow_equal_eps:
            raise ValueError("eps_minus == eps_plus is only allowed in test mode")

    @property
    def zero_trace(self):
        return self.boundary is None

    def replace(self, **kw):
        from dataclasses import replace
        return replace(self, **kw)
