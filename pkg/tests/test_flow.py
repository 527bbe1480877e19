import numpy as np
import pytest

from pbforce.errors import GeometryError
from pbforce.geometry import (ConstantField, GridSpec, RadialBump, RotationalField, ZeroField,
                              extract_interface, flipped_volume, flow_map, jacobian_Jt,
                              levelset_sphere, matrix_AV_derivative, matrix_AVt,
                              tangential_drift_check, tangential_projector)
from pbforce.geometry.velocity import (TangentialField, VelocityField, generic_ambient,
                                       levelset_tube_weight, sphere_normal)

RNG = np.random.default_rng(3)
X = RNG.normal(size=(40, 3)) * 1.2
BUMP = RadialBump((0, 0, 0), 1.0, 0.3, 0.4)
GENTLE = RadialBump((0, 0, 0), 2.0, 0.5, 1.5, amplitude=0.5)


def test_identity_cases():
    far = np.array([[5.0, 0.0, 0.0], [0.0, 0.0, 0.1]])
    np.testing.assert_array_equal(flow_map(BUMP, far, 0.7), far)
    np.testing.assert_array_equal(flow_map(BUMP, X, 0.0), X)
    np.testing.assert_array_equal(jacobian_Jt(BUMP, X, 0.0), 1.0)
    np.testing.assert_array_equal(matrix_AVt(BUMP, X, 0.0), np.broadcast_to(np.eye(3), (40, 3, 3)))


def test_linear_flow_for_constant_field():
    v = np.array([0.3, -0.2, 0.1])
    V = ConstantField(v, (0, 0, 0), 3.0, 1.0)
    x = RNG.uniform(-0.5, 0.5, (10, 3))
    np.testing.assert_allclose(flow_map(V, x, 0.8), x + 0.8 * v, atol=1e-14)
    np.testing.assert_allclose(matrix_AVt(V, x, 0.8), np.broadcast_to(np.eye(3), (10, 3, 3)),
                               atol=1e-14)


@pytest.mark.parametrize("t", [0.1, -0.05, 0.013])
def test_reversibility(t):
    back = flow_map(BUMP, flow_map(BUMP, X, t), -t)
    assert np.max(np.linalg.norm(back - X, axis=1)) < 1e-8


def test_jacobian_positive_and_divergence_free():
    rot = RotationalField((0, 0, 0), (0.3, -0.5, 1.0), 1.0, 0.4, 0.5)
    np.testing.assert_allclose(jacobian_Jt(rot, X, 0.5), 1.0, atol=1e-8)
    for t in (0.5, -0.5, 1.0):
        assert np.all(jacobian_Jt(BUMP, X, t) > 0)


def test_jacobian_slope():
    div = BUMP.divergence(X)
    errs = [np.max(np.abs((jacobian_Jt(BUMP, X, t) - 1) / t - div)) for t in (1e-2, 1e-3)]
    assert errs[1] < errs[0] / 8          # first-order approach of the difference quotient
    assert errs[1] < 2e-2


def test_analytic_jacobians_match_fd():
    lobe = RadialBump((0.2, 0, 0), 1.0, 0.3, 0.4, direction=(1, 1, 0), cone=(0.2, 0.6))
    rot = RotationalField((0, 0, 0), (0.3, -0.5, 1.0), 1.0, 0.4, 0.5)
    for V in (BUMP, lobe, rot):
        np.testing.assert_allclose(V.jacobian(X), VelocityField.jacobian(V, X), atol=1e-6)


def test_A_derivative_central_difference():
    t = 1e-4
    exact = matrix_AV_derivative(GENTLE, X)
    central = (matrix_AVt(GENTLE, X, t) - matrix_AVt(GENTLE, X, -t)) / (2 * t)
    assert np.max(np.abs(central - exact)) < 1e-6


def test_A_derivative_one_sided_first_order():
    exact = matrix_AV_derivative(GENTLE, X)
    e = [np.max(np.abs((matrix_AVt(GENTLE, X, t) - np.eye(3)) / t - exact)) for t in (1e-3, 1e-4)]
    assert 8 < e[0] / e[1] < 12


def test_projector():
    P = tangential_projector(np.array([0.0, 0.0, 1.0]))
    np.testing.assert_array_equal(P, np.diag([1.0, 1.0, 0.0]))
    n = np.array([1.0, 2.0, 2.0]) / 3.0
    P = tangential_projector(n)
    np.testing.assert_allclose(P @ n, 0.0, atol=1e-15)
    np.testing.assert_allclose(P @ P, P, atol=1e-15)
    t = np.cross(n, [1.0, 0.0, 0.0])
    np.testing.assert_allclose(P @ t, t, atol=1e-15)
    with pytest.raises(GeometryError):
        tangential_projector(np.array([1.0, 1.0, 0.0]))


def test_flow_parameter_bound():
    with pytest.raises(GeometryError):
        flow_map(BUMP, X, 1.5)


@pytest.fixture(scope="module")
def sphere():
    g = GridSpec.cube(4.0, 64)
    return levelset_sphere((0, 0, 0), 2.0, g)


def test_drift_zero_field(sphere):
    r = tangential_drift_check(sphere, ZeroField(), [0.04, 0.02, 0.01])
    assert np.all(r.drifts == 0.0)
    assert np.isnan(r.slope)


def test_drift_rotation_about_center(sphere):
    rot = RotationalField((0, 0, 0), (0.3, 0.5, 1.0), 2.0, 0.5, 0.5)
    r = tangential_drift_check(sphere, rot, [0.04, 0.02, 0.01], normal=sphere_normal((0, 0, 0)))
    # the rotation preserves |x| exactly; what remains is spline error of phi on the sphere
    assert r.drifts.max() < 1e-5 * sphere.grid.h


def test_drift_generic_tangential_bounded_by_t2(sphere):
    V = TangentialField(generic_ambient(1), sphere.normal, levelset_tube_weight(sphere, 0.3, 0.5))
    ts = [0.04, 0.02, 0.01]
    r = tangential_drift_check(sphere, V, ts)
    assert np.all(r.drifts / np.square(ts) < 1e-6)


def test_drift_rejects_non_tangential(sphere):
    with pytest.raises(GeometryError):
        tangential_drift_check(sphere, RadialBump((0, 0, 0), 2.0, 0.3, 0.4), [0.04, 0.02, 0.01])
    with pytest.raises(GeometryError):
        tangential_drift_check(sphere, ZeroField(), [0.04, 0.02])


def test_flipped_volume(sphere):
    V = TangentialField(generic_ambient(1), sphere.normal, levelset_tube_weight(sphere, 0.3, 0.5))
    bump = RadialBump((0, 0, 0), 2.0, 0.3, 0.4)
    shell = 4 * np.pi * 4.0 * 0.05
    normal_flip = flipped_volume(sphere, bump, 0.05)
    assert abs(normal_flip - shell) / shell < 0.3
    # a tangential flow flips at most a node that sits on the interface to roundoff
    assert flipped_volume(sphere, V, 0.05) < 2 * sphere.grid.h ** 3
