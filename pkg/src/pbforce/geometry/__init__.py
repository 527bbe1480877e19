from .grid import GridSpec, ScalarField, interpolate, spline_gradient
from .levelset import LevelSet, levelset_sphere, levelset_union, redistance
from .interface import InterfaceMesh, extract_interface, triangulate
from .velocity import (ConstantField, LinearCombination, RadialBump, RotationalField,
                       TangentialField, VelocityField, ZeroField)
from .flow import (flipped_volume, flow_map, flow_with_derivatives, jacobian_Jt, matrix_AVt,
                   matrix_AV_derivative, tangential_drift_check, tangential_projector)
