"""Flow of a velocity field: T_t, its Jacobian determinant J_t and the metric A_V(t)."""

import math

import numpy as np

from ..errors import GeometryError

MAX_STEP = 0.01


def n_steps(t):
    return max(8, math.ceil(abs(t) / MAX_STEP))


def _rk4(rhs, state, t):
    if t == 0.0:
        return state
    n = n_steps(t)
    dt = t / n
    for _ in range(n):
        k1 = rhs(state)
        k2 = rhs([s + 0.5 * dt * k for s, k in zip(state, k1)])
        k3 = rhs([s + 0.5 * dt * k for s, k in zip(state, k2)])
        k4 = rhs([s + dt * k for s, k in zip(state, k3)])
        state = [s + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d) for s, a, b, c, d in zip(state, k1, k2, k3, k4)]
    return state


def _check_t(t):
    if abs(t) > 1.0:
        raise GeometryError(f"flow parameter |t| = {abs(t)} exceeds 1")


def flow_map(V, X, t):
    """T_t(X) by fixed-step RK4; X has shape (..., 3)."""
    _check_t(t)
    X = np.asarray(X, dtype=float)
    (x,) = _rk4(lambda s: [V(s[0])], [X.copy()], float(t))
    return x


def flow_with_derivatives(V, X, t):
    """Integrate x, grad T_t and J_t together. Returns (x, F, J)."""
    _check_t(t)
    X = np.asarray(X, dtype=float)
    F0 = np.broadcast_to(np.eye(3), X.shape[:-1] + (3, 3)).copy()
    J0 = np.ones(X.shape[:-1])

    def rhs(s):
        x, F, J = s
        g = V.jacobian(x)
        return [V(x), g @ F, np.trace(g, axis1=-2, axis2=-1) * J]

    x, F, J = _rk4(rhs, [X.copy(), F0, J0], float(t))
    return x, F, J


def jacobian_Jt(V, X, t):
    return flow_with_derivatives(V, X, t)[2]


def matrix_AVt(V, X, t):
    """A_V(t) = J_t (grad T_t)^{-1} (grad T_t)^{-T}."""
    _, F, J = flow_with_derivatives(V, X, t)
    Finv = np.linalg.inv(F)
    return J[..., None, None] * (Finv @ np.swapaxes(Finv, -1, -2))


def matrix_AV_derivative(V, X):
    """Limit of (A_V(t) - I)/t: (div V) I - grad V - (grad V)^T."""
    g = V.jacobian(np.asarray(X, dtype=float))
    div = np.trace(g, axis1=-2, axis2=-1)
    return div[..., None, None] * np.eye(3) - g - np.swapaxes(g, -1, -2)


def tangential_projector(n):
    n = np.asarray(n, dtype=float)
    if abs(np.linalg.norm(n) - 1.0) > 1e-10:
        raise GeometryError("tangential projector needs a unit vector")
    return np.eye(3) - np.outer(n, n)


def project_to_zero_set(ls, x, iters=8):
    """Newton steps along grad phi onto the zero set of the spline interpolant."""
    x = np.array(x, dtype=float)
    for _ in range(iters):
        g = ls.gradient(x)
        x -= (ls(x) / np.sum(g * g, axis=-1))[:, None] * g
    return x


class DriftResult:
    def __init__(self, t_values, drifts, slope):
        self.t_values = np.asarray(t_values)
        self.drifts = np.asarray(drifts)
        self.slope = slope

    def __repr__(self):
        return f"DriftResult(slope={self.slope:.3f}, drifts={self.drifts})"


def loglog_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def tangential_drift_check(ls, V, t_values, samples=None, normal=None, normal_tol=1e-10):
    """max |phi(T_t(X)) - phi(X)| over interface samples X for each t and its log-log slope in t.

    ``normal`` is the unit normal used for the tangency precondition
    (default: the level-set normal). The slope is nan when every drift is
    zero (e.g. V = 0).
    """
    t_values = list(t_values)
    if len(t_values) < 3:
        raise GeometryError("drift check needs at least 3 values of t")
    if samples is None:
        from .interface import extract_interface

        samples = extract_interface(ls).points
    X = project_to_zero_set(ls, samples)
    nrm = ls.normal(X) if normal is None else normal(X)
    vn = np.abs(np.sum(V(X) * nrm, axis=-1))
    scale = max(1.0, float(np.max(np.linalg.norm(V(X), axis=-1), initial=0.0)))
    if vn.max(initial=0.0) > normal_tol * scale:
        raise GeometryError(f"V.n = {vn.max():.3e} at interface samples; field is not tangential")
    phi0 = ls(X)
    drifts = np.array([np.max(np.abs(ls(flow_map(V, X, t)) - phi0)) for t in t_values])
    if np.all(drifts == 0.0):
        slope = float("nan")
    else:
        slope = loglog_slope(np.abs(t_values), np.maximum(drifts, 1e-300))
    return DriftResult(t_values, drifts, slope)


def flipped_volume(ls, V, t, transported=None):
    """h^3 times the number of nodes whose inside/outside class changes under T_t."""
    if transported is None:
        back = flow_map(V, ls.grid.points().reshape(-1, 3), -t)
        new = ls(back).reshape(ls.grid.shape)
    else:
        new = transported.values
    flips = np.count_nonzero((new <= 0) != (ls.values <= 0))
    return flips * ls.grid.cell_volume
