import numpy as np
import pytest

from pbforce.elliptic import (EllipticOperator, assemble, cg_solve, constant_operator,
                              solve_dirichlet)
from pbforce.errors import ConvergenceError
from pbforce.geometry import GridSpec, levelset_sphere


def unit_grid(n):
    return GridSpec((0.0, 0.0, 0.0), (1.0, 1.0, 1.0), (n, n, n))


def interior(grid):
    return ~grid.boundary_mask()


def random_interior(grid, seed):
    u = np.random.default_rng(seed).normal(size=grid.shape)
    u[grid.boundary_mask()] = 0.0
    return u


def test_constant_eps_faces():
    g = GridSpec.cube(2.0, 17)
    ls = levelset_sphere((0, 0, 0), 0.5, g)
    for rule in ("nodal", "fraction"):
        op = assemble(ls, 3.0, 3.0, rule=rule)
        for f in op.faces:
            np.testing.assert_allclose(f, 3.0, rtol=1e-15)


def test_nodal_rule_harmonic_face_value():
    g = GridSpec.cube(2.0, 17)
    ls = levelset_sphere((0, 0, 0), 0.6, g)
    op = assemble(ls, 1.0, 80.0, rule="nodal")
    ex = op.faces[0]
    a, b = ls.inside[:-1], ls.inside[1:]
    crossing = a != b
    assert crossing.any()
    np.testing.assert_allclose(ex[crossing], 2 * 80 / 81, rtol=1e-15)
    np.testing.assert_allclose(ex[a & b], 1.0)
    np.testing.assert_allclose(ex[~a & ~b], 80.0)


def test_fraction_rule_limits():
    g = GridSpec.cube(2.0, 17)
    ls = levelset_sphere((0, 0, 0), 0.6, g)
    nodal = assemble(ls, 1.0, 80.0, rule="nodal")
    frac = assemble(ls, 1.0, 80.0, rule="fraction")
    for fn, ff in zip(nodal.faces, frac.faces):
        same = (fn == 1.0) | (fn == 80.0)
        np.testing.assert_allclose(ff[same], fn[same])
        assert np.all((ff >= 1.0) & (ff <= 80.0))


def test_bad_permittivity():
    ls = levelset_sphere((0, 0, 0), 0.6, GridSpec.cube(2.0, 17))
    with pytest.raises(ValueError):
        assemble(ls, 0.0, 80.0)
    with pytest.raises(ValueError):
        assemble(ls, 1.0, 80.0, rule="arithmetic")


def test_constant_in_kernel():
    g = GridSpec.cube(2.0, 17)
    op = assemble(levelset_sphere((0, 0, 0), 0.6, g), 1.0, 80.0)
    out = op.apply(np.full(g.shape, 2.5))
    assert np.max(np.abs(out[interior(g)])) < 1e-11
    assert np.all(out[g.boundary_mask()] == 0.0)


def test_symmetry():
    g = GridSpec.cube(2.0, 17)
    op = assemble(levelset_sphere((0, 0, 0), 0.6, g), 1.0, 80.0,
                  diag=np.random.default_rng(0).uniform(0, 2, g.shape))
    u, v = random_interior(g, 1), random_interior(g, 2)
    a, b = np.vdot(op.apply(u), v), np.vdot(u, op.apply(v))
    assert abs(a - b) <= 1e-12 * abs(a)


def test_zero_rhs():
    g = unit_grid(9)
    res = cg_solve(constant_operator(g), np.zeros(g.shape))
    assert np.all(res.solution == 0.0) and res.iterations == 0


def test_recovers_known_field():
    g = GridSpec.cube(2.0, 21)
    op = assemble(levelset_sphere((0, 0, 0), 0.8, g), 1.0, 80.0)
    x = random_interior(g, 3)
    res = cg_solve(op, op.apply(x), tol=1e-12)
    assert res.residual <= 1e-12
    assert np.max(np.abs(res.solution - x)) < 1e-8 * np.max(np.abs(x))


def test_cg_deterministic():
    g = GridSpec.cube(2.0, 21)
    op = assemble(levelset_sphere((0, 0, 0), 0.8, g), 1.0, 80.0)
    b = random_interior(g, 4)
    r1, r2 = cg_solve(op, b), cg_solve(op, b)
    np.testing.assert_array_equal(r1.solution, r2.solution)
    assert r1.iterations == r2.iterations


def test_cg_iteration_cap():
    g = GridSpec.cube(2.0, 21)
    op = constant_operator(g)
    with pytest.raises(ConvergenceError) as err:
        cg_solve(op, random_interior(g, 5), tol=1e-12, max_iter=3)
    assert err.value.iterations == 3 and err.value.residual > 1e-12


def test_cg_error_energy_norm_monotone():
    # PCG minimizes the A-norm of the error over growing Krylov spaces; the
    # residual 2-norm itself may oscillate.
    g = GridSpec.cube(2.0, 13)
    op = assemble(levelset_sphere((0, 0, 0), 0.6, g), 1.0, 80.0)
    x = random_interior(g, 6)
    b = op.apply(x)
    errs = []
    for k in range(1, 25):
        e = cg_solve(op, b, tol=1e-14, max_iter=k, raise_on_fail=False).solution - x
        errs.append(np.vdot(e, op.apply(e)))
    assert np.all(np.diff(errs) <= 1e-12 * errs[0])
    assert errs[-1] < 1e-3 * errs[0]


def test_nonnegative_diag_shrinks_solution():
    g = GridSpec.cube(2.0, 17)
    ls = levelset_sphere((0, 0, 0), 0.6, g)
    rng = np.random.default_rng(7)
    b = rng.uniform(0, 1, g.shape)
    d = rng.uniform(0, 5, g.shape)
    u0 = cg_solve(assemble(ls, 1.0, 80.0), b, tol=1e-12).solution
    u1 = cg_solve(assemble(ls, 1.0, 80.0, diag=d), b, tol=1e-12).solution
    assert u1.max() <= u0.max() * (1 + 1e-10)
    assert u1.min() >= -1e-12


def test_negative_diag_rejected():
    g = unit_grid(8)
    with pytest.raises(ValueError):
        constant_operator(g, diag=-np.ones(g.shape))


def test_dirichlet_affine_exact():
    g = GridSpec.cube(2.0, 17)
    op = constant_operator(g, 2.0)
    lin = g.points() @ np.array([0.3, -1.0, 2.0]) + 0.5
    u, _ = solve_dirichlet(op, lin, tol=1e-13)
    assert np.max(np.abs(u - lin)) < 1e-9


def _mms_error(n, exact, lap):
    g = unit_grid(n)
    x = g.points()
    ue = exact(x)
    u, _ = solve_dirichlet(constant_operator(g), ue, source=-lap(x), tol=1e-12)
    return np.sqrt(np.mean((u - ue)[interior(g)] ** 2))


def _orders(exact, lap, ns=(25, 49, 97)):
    e = [_mms_error(n, exact, lap) for n in ns]
    return np.log2(np.array(e[:-1]) / np.array(e[1:]))


def test_manufactured_sine_order():
    pi = np.pi
    exact = lambda x: np.sin(pi * x[..., 0]) * np.sin(pi * x[..., 1]) * np.sin(pi * x[..., 2])
    lap = lambda x: -3 * pi ** 2 * exact(x)
    for p in _orders(exact, lap):
        assert abs(p - 2.0) <= 0.1


def test_manufactured_non_eigen_order():
    # not an eigenfunction of the discrete Laplacian, with nonzero boundary data
    exact = lambda x: np.exp(x[..., 0] + 0.5 * x[..., 1]) * np.cos(1.3 * x[..., 2])
    lap = lambda x: (1 + 0.25 - 1.69) * exact(x)
    for p in _orders(exact, lap):
        assert abs(p - 2.0) <= 0.1
