import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pbforce.errors import NeutralityError, SaturationError
from pbforce.geometry import GridSpec, ScalarField, levelset_sphere
from pbforce.ion_model import (IonicSpecies, IonModel, b_deriv, b_deriv2, b_value,
                               equilibrium_concentrations)

C = 6e-5
SYM = IonModel.symmetric(C)
TWO_ONE = IonModel([IonicSpecies(2.0, C), IonicSpecies(-1.0, 2 * C)])


def test_b_vanishes_at_zero():
    for m in (SYM, TWO_ONE):
        assert b_value(m, 0.0) == 0.0
        assert abs(b_deriv(m, 0.0)) <= 1e-12 * C


def test_symmetric_salt_closed_form():
    s = np.linspace(-5, 5, 41)
    np.testing.assert_allclose(b_value(SYM, s), 2 * C * (np.cosh(s) - 1), rtol=1e-13, atol=1e-20)
    np.testing.assert_allclose(b_deriv(SYM, s), 2 * C * np.sinh(s), rtol=1e-13, atol=1e-20)
    np.testing.assert_allclose(b_deriv(SYM, -s), -b_deriv(SYM, s), rtol=1e-13, atol=1e-20)


def test_two_one_salt_fd_slope_at_zero():
    d = 1e-5
    assert abs((b_value(TWO_ONE, d) - b_value(TWO_ONE, -d)) / (2 * d)) < 1e-9 * C


@pytest.mark.parametrize("s", [-2.0, 0.5, 3.0])
def test_derivatives_match_finite_differences(s):
    d = 1e-5
    for m in (SYM, TWO_ONE):
        fd1 = (b_value(m, s + d) - b_value(m, s - d)) / (2 * d)
        fd2 = (b_deriv(m, s + d) - b_deriv(m, s - d)) / (2 * d)
        assert abs(fd1 - b_deriv(m, s)) <= 1e-8 * abs(b_deriv(m, s))
        assert abs(fd2 - b_deriv2(m, s)) <= 1e-8 * abs(b_deriv2(m, s))


def test_derivatives_on_log_grid():
    s = np.concatenate([-np.logspace(-3, 1, 20), np.logspace(-3, 1, 20)])
    for m in (SYM, TWO_ONE):
        d = 1e-5 * np.maximum(1.0, np.abs(s))
        fd = (b_deriv(m, s + d) - b_deriv(m, s - d)) / (2 * d)
        np.testing.assert_allclose(fd, b_deriv2(m, s), rtol=1e-7)


@settings(max_examples=200, deadline=None)
@given(st.floats(-8, 8), st.floats(-8, 8), st.floats(0.01, 0.99))
def test_strict_convexity(s1, s2, lam):
    for m in (SYM, TWO_ONE):
        mid = b_value(m, lam * s1 + (1 - lam) * s2)
        chord = lam * b_value(m, s1) + (1 - lam) * b_value(m, s2)
        if abs(s1 - s2) > 1e-3:
            # strong convexity on the interval: B'' >= m there gives a quadratic margin
            m2 = float(np.min(b_deriv2(m, np.linspace(min(s1, s2), max(s1, s2), 201))))
            margin = 0.25 * lam * (1 - lam) * (s1 - s2) ** 2 * m2
            assert mid <= chord - margin
        else:
            assert mid <= chord + 1e-15 * abs(chord) + 1e-30


def test_positive_away_from_zero():
    s = np.random.default_rng(1).uniform(-10, 10, 1000)
    s = s[s != 0]
    assert np.all(b_value(SYM, s) > 0)
    assert np.all(b_value(TWO_ONE, s) > 0)
    assert np.all(b_deriv2(TWO_ONE, s) > 0)


def test_neutrality_rejected():
    with pytest.raises(NeutralityError):
        IonModel([IonicSpecies(1.0, C), IonicSpecies(-1.0, 2 * C)])
    with pytest.raises(NeutralityError):
        IonModel([IonicSpecies(1.0, C)])


def test_species_invariants():
    with pytest.raises(ValueError):
        IonicSpecies(0.0, C)
    with pytest.raises(ValueError):
        IonicSpecies(1.0, 0.0)


def test_saturation_guard():
    with pytest.raises(SaturationError):
        b_value(SYM, 501.0)
    with pytest.raises(SaturationError):
        b_deriv(TWO_ONE, 300.0)


def test_equilibrium_concentrations():
    g = GridSpec.cube(4.0, 24)
    ls = levelset_sphere((0, 0, 0), 2.0, g)
    zero = ScalarField(g, np.zeros(g.shape))
    for c, sp in zip(equilibrium_concentrations(TWO_ONE, zero, zero, ls), TWO_ONE.species):
        assert np.all(c.values[ls.outside] == sp.concentration)
        assert np.all(c.values[ls.inside] == 0.0)
    rng = np.random.default_rng(0)
    psi = ScalarField(g, rng.uniform(-2, 2, g.shape))
    pinf = ScalarField(g, rng.uniform(-1, 1, g.shape))
    cs = equilibrium_concentrations(TWO_ONE, psi, pinf, ls)
    rho = sum(sp.charge * c.values for sp, c in zip(TWO_ONE.species, cs))
    expect = -b_deriv(TWO_ONE, psi.values - pinf.values / 2)
    np.testing.assert_allclose(rho[ls.outside], expect[ls.outside], rtol=1e-12, atol=1e-14 * C)
    assert np.all(np.concatenate([c.values[ls.outside] for c in cs]) > 0)
