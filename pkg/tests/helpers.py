"""Shared test systems; expensive solves are cached per process."""

from functools import lru_cache

import numpy as np

from pbforce.geometry import GridSpec, levelset_sphere, levelset_union
from pbforce.geometry.velocity import RadialBump
from pbforce.ion_model import IonModel
from pbforce.pb_solver import compute_auxiliary, solve_pb
from pbforce.singular_fields import PointChargeSet
from pbforce.system import SolvationSystem
from pbforce.units import molar_to_number_density, permittivity

EPS_IN = permittivity(1.0)
EPS_OUT = permittivity(80.0)
SALT = molar_to_number_density(0.1)
R = 2.0
HALF = 4.0
DUMBBELL_CENTERS = ((-1.2, 0.0, 0.0), (1.2, 0.0, 0.0))
DUMBBELL_RADIUS = 1.5
ACCEPTANCE_LINES = []


def salt(c=SALT):
    return IonModel.symmetric(c) if c > 0 else IonModel.salt_free()


def born_system(Q=1.0, c=SALT, eps_out=EPS_OUT, **kw):
    return SolvationSystem(PointChargeSet([[0.0, 0.0, 0.0]], [Q]), EPS_IN, eps_out, salt(c), **kw)


@lru_cache(maxsize=None)
def born_levelset(n, radius=R):
    return levelset_sphere((0.0, 0.0, 0.0), radius, GridSpec.cube(HALF, n))


@lru_cache(maxsize=None)
def born_solution(n, Q=1.0, c=SALT, eps_out=EPS_OUT):
    sys_ = born_system(Q, c, eps_out)
    return solve_pb(sys_, born_levelset(n))


@lru_cache(maxsize=None)
def dumbbell_levelset(n):
    g = GridSpec.cube(HALF, n)
    a, b = (levelset_sphere(c, DUMBBELL_RADIUS, g) for c in DUMBBELL_CENTERS)
    return levelset_union(a, b)


def dumbbell_system():
    return SolvationSystem(PointChargeSet(DUMBBELL_CENTERS, [1.0, -0.5]), EPS_IN, EPS_OUT, salt())


@lru_cache(maxsize=None)
def dumbbell_solution(n):
    return solve_pb(dumbbell_system(), dumbbell_levelset(n))


def radial_bump(flat=0.3, width=0.4):
    return RadialBump((0.0, 0.0, 0.0), R, flat, width)


def lobe_bump():
    return RadialBump(DUMBBELL_CENTERS[1], DUMBBELL_RADIUS, 0.3, 0.4, direction=(1, 0, 0),
                      cone=(0.2, 0.6))


def record(number, title, parts):
    """Append one PASS/FAIL line for an acceptance criterion.

    ``parts`` holds (label, measured, limit, ok) tuples; returns the failing labels.
    """
    ok = all(p[3] for p in parts)
    detail = "; ".join(f"{label} = {value} (need {limit}){'' if good else ' FAIL'}"
                       for label, value, limit, good in parts)
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return [p[0] for p in parts if not p[3]]
