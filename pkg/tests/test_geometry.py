import numpy as np
import pytest

from pbforce.errors import GeometryError, GridMismatchError
from pbforce.geometry import (GridSpec, LevelSet, extract_interface, levelset_sphere,
                              levelset_union)
from pbforce.geometry.grid import interpolate

UNIT_GRID = GridSpec.cube(1.5, 97)      # h = 1/32


def test_gridspec_invariants():
    g = GridSpec((0, 0, 0), (1, 2, 3), (8, 9, 10))
    np.testing.assert_allclose(g.spacing, (1 / 7, 2 / 8, 3 / 9))
    with pytest.raises(ValueError):
        GridSpec((0, 0, 0), (1, 1, 1), (7, 8, 8))
    with pytest.raises(ValueError):
        GridSpec((0, 0, 0), (1, -1, 1), (8, 8, 8))


def test_trilinear_reproduces_affine():
    g = GridSpec.cube(1.0, 11)
    f = g.points() @ np.array([1.0, -2.0, 0.5]) + 3.0
    x = np.random.default_rng(0).uniform(-0.9, 0.9, (50, 3))
    np.testing.assert_allclose(interpolate(g, f, x), x @ np.array([1.0, -2.0, 0.5]) + 3.0, rtol=1e-12)


def test_sphere_values():
    g = GridSpec.cube(2.0, 17)
    c = np.array([0.1, 0.0, -0.2])
    ls = levelset_sphere(c, 0.7, g)
    np.testing.assert_allclose(ls.values, np.linalg.norm(g.points() - c, axis=-1) - 0.7)
    ls0 = levelset_sphere((0, 0, 0), 0.0, g)
    np.testing.assert_allclose(ls0.values, np.linalg.norm(g.points(), axis=-1))
    centered = levelset_sphere((0, 0, 0), 1.0, g)
    assert centered.values[8, 8, 8] == -1.0


def test_tie_break_on_sphere_node():
    g = GridSpec.cube(2.0, 17)          # h = 0.25, node (1, 0, 0) lies on the unit sphere
    ls = levelset_sphere((0, 0, 0), 1.0, g)
    i = g.to_index(np.array([[1.0, 0.0, 0.0]]))[0].round().astype(int)
    assert ls.values[tuple(i)] == 0.0
    assert ls.inside[tuple(i)] and not ls.outside[tuple(i)]


def test_sphere_clearance():
    g = GridSpec.cube(2.0, 17)
    with pytest.raises(GeometryError):
        levelset_sphere((0, 0, 0), 1.5, g)


def test_gradient_defect_small_on_sphere():
    ls = levelset_sphere((0, 0, 0), 1.0, UNIT_GRID)
    assert ls.gradient_defect() < 0.05


def test_unit_sphere_area_and_curvature():
    ls = levelset_sphere((0, 0, 0), 1.0, UNIT_GRID)
    mesh = extract_interface(ls)
    assert abs(mesh.area - 4 * np.pi) / (4 * np.pi) < 0.02
    assert np.all(np.abs(mesh.curvature - 1.0) < 0.1)
    np.testing.assert_allclose(np.linalg.norm(mesh.normals, axis=1), 1.0, atol=1e-12)
    g = ls.gradient(mesh.points)
    cosang = np.sum(mesh.normals * g, axis=1) / np.linalg.norm(g, axis=1)
    assert np.all(np.abs(cosang - 1.0) < 1e-8)
    np.testing.assert_allclose(np.linalg.norm(mesh.points, axis=1), 1.0, atol=UNIT_GRID.h ** 2)


def test_flat_limit_curvature():
    g = GridSpec.cube(1.0, 33)
    c = np.array([0.0, 0.0, -1000.0])
    ls = LevelSet(g, np.linalg.norm(g.points() - c, axis=-1) - 1000.0)
    mesh = extract_interface(ls)
    assert np.all(np.abs(mesh.curvature) < 0.01)


def test_union_idempotent_nested_disjoint():
    g = GridSpec.cube(3.0, 65)
    a = levelset_sphere((0, 0, 0), 1.0, g)
    np.testing.assert_array_equal(levelset_union(a, a, redistance_tube=False).values, a.values)
    np.testing.assert_allclose(levelset_union(a, a).values, a.values, atol=0.05 * g.h)   # redistancing error only
    big = levelset_sphere((0, 0, 0), 1.5, g)
    nested = levelset_union(big, a)
    mb = extract_interface(big)
    mn = extract_interface(nested)
    assert abs(mn.area - mb.area) < 1e-12 * mb.area
    s1 = levelset_sphere((-1.3, 0, 0), 0.9, g)
    s2 = levelset_sphere((1.4, 0.2, 0), 0.8, g)
    u = levelset_union(s1, s2)
    mesh = extract_interface(u)
    assert mesh.n_components() == 2
    expect = 4 * np.pi * (0.9 ** 2 + 0.8 ** 2)
    assert abs(mesh.area - expect) / expect < 0.03
    assert u.gradient_defect() < 0.05


def test_union_grid_mismatch():
    a = levelset_sphere((0, 0, 0), 1.0, GridSpec.cube(3.0, 33))
    b = levelset_sphere((0, 0, 0), 1.0, GridSpec.cube(3.0, 35))
    with pytest.raises(GridMismatchError):
        levelset_union(a, b)


def test_empty_interface():
    g = GridSpec.cube(1.0, 9)
    with pytest.raises(GeometryError):
        extract_interface(LevelSet(g, np.ones(g.shape)))
