"""Compactly supported velocity fields that deform the dielectric boundary."""

import numpy as np

FD_STEP = 1e-6


def smoothstep(x):
    """C2 ramp: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10.0 - 15.0 * x + 6.0 * x * x)


def smoothstep_deriv(x):
    inside = (x > 0.0) & (x < 1.0)
    xc = np.clip(x, 0.0, 1.0)
    return np.where(inside, 30.0 * xc**2 * (xc - 1.0) ** 2, 0.0)


def plateau(d, flat, width):
    """1 for |d| <= flat, C2 decay to 0 at |d| = flat + width."""
    return 1.0 - smoothstep((np.abs(d) - flat) / width)


def plateau_deriv(d, flat, width):
    return -smoothstep_deriv((np.abs(d) - flat) / width) / width * np.sign(d)


class VelocityField:
    """Base class: subclasses provide ``__call__``; jacobians default to central differences.

    ``jacobian(x)[..., i, j]`` is dV_i/dx_j.
    """

    support_radius = np.inf

    def __call__(self, x):
        raise NotImplementedError

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        cols = []
        for j in range(3):
            e = np.zeros(3)
            e[j] = FD_STEP
            cols.append((self(x + e) - self(x - e)) / (2.0 * FD_STEP))
        return np.stack(cols, axis=-1)

    def divergence(self, x):
        return np.trace(self.jacobian(x), axis1=-2, axis2=-1)

    def __add__(self, other):
        return LinearCombination([(1.0, self), (1.0, other)])

    def __rmul__(self, a):
        return LinearCombination([(float(a), self)])


class LinearCombination(VelocityField):
    def __init__(self, terms):
        self.terms = list(terms)
        self.support_radius = max(v.support_radius for _, v in self.terms)

    def __call__(self, x):
        return sum(a * v(x) for a, v in self.terms)

    def jacobian(self, x):
        return sum(a * v.jacobian(x) for a, v in self.terms)


class ZeroField(VelocityField):
    support_radius = 0.0

    def __call__(self, x):
        return np.zeros(np.shape(x))

    def jacobian(self, x):
        return np.zeros(np.shape(x) + (3,))


class ConstantField(VelocityField):
    """``v`` inside a ball of radius ``radius``, C2 cutoff over ``width``."""

    def __init__(self, v, center, radius, width):
        self.v = np.asarray(v, dtype=float)
        self.center = np.asarray(center, dtype=float)
        self.radius = radius
        self.width = width
        self.support_radius = radius + width

    def _r(self, x):
        return np.linalg.norm(np.asarray(x) - self.center, axis=-1)

    def __call__(self, x):
        w = 1.0 - smoothstep((self._r(x) - self.radius) / self.width)
        return w[..., None] * self.v

    def jacobian(self, x):
        rel = np.asarray(x) - self.center
        r = np.linalg.norm(rel, axis=-1)
        dw = -smoothstep_deriv((r - self.radius) / self.width) / self.width
        grad_w = dw[..., None] * rel / np.maximum(r, 1e-300)[..., None]
        return self.v[:, None] * grad_w[..., None, :]


class RadialBump(VelocityField):
    """``amplitude * b(r) * e_r`` around ``center``, with b = 1 for |r - radius| <= flat.

    Optionally restricted to a cone around ``direction``: the angular weight is
    1 where cos(angle) >= cone[1] and 0 where cos(angle) <= cone[0].
    """

    def __init__(self, center, radius, flat, width, amplitude=1.0, direction=None, cone=None):
        self.center = np.asarray(center, dtype=float)
        self.radius = radius
        self.flat = flat
        self.width = width
        self.amplitude = amplitude
        self.direction = None if direction is None else np.asarray(direction, float) / np.linalg.norm(direction)
        self.cone = cone
        self.support_radius = flat + width

    def _parts(self, x):
        rel = np.asarray(x, dtype=float) - self.center
        r = np.linalg.norm(rel, axis=-1)
        rs = np.maximum(r, 1e-300)
        er = rel / rs[..., None]
        b = plateau(r - self.radius, self.flat, self.width)
        db = plateau_deriv(r - self.radius, self.flat, self.width)
        if self.direction is None:
            ang = np.ones_like(r)
            grad_ang = np.zeros_like(rel)
        else:
            c0, c1 = self.cone
            cos = er @ self.direction
            arg = (cos - c0) / (c1 - c0)
            ang = smoothstep(arg)
            dcos = (self.direction - cos[..., None] * er) / rs[..., None]
            grad_ang = (smoothstep_deriv(arg) / (c1 - c0))[..., None] * dcos
        return rs, er, b, db, ang, grad_ang

    def __call__(self, x):
        _, er, b, _, ang, _ = self._parts(x)
        return (self.amplitude * b * ang)[..., None] * er

    def jacobian(self, x):
        rs, er, b, db, ang, grad_ang = self._parts(x)
        f = b * ang
        grad_f = (db * ang)[..., None] * er + b[..., None] * grad_ang
        eye = np.eye(3)
        proj = eye - er[..., :, None] * er[..., None, :]
        jac = er[..., :, None] * grad_f[..., None, :] + (f / rs)[..., None, None] * proj
        return self.amplitude * jac


class RotationalField(VelocityField):
    """Rigid rotation ``omega x (x - center)`` damped by a radial plateau; divergence-free."""

    def __init__(self, center, omega, radius, flat, width):
        self.center = np.asarray(center, dtype=float)
        self.omega = np.asarray(omega, dtype=float)
        self.radius = radius
        self.flat = flat
        self.width = width
        self.support_radius = flat + width

    def __call__(self, x):
        rel = np.asarray(x, dtype=float) - self.center
        r = np.linalg.norm(rel, axis=-1)
        b = plateau(r - self.radius, self.flat, self.width)
        return b[..., None] * np.cross(self.omega, rel)

    def jacobian(self, x):
        rel = np.asarray(x, dtype=float) - self.center
        r = np.linalg.norm(rel, axis=-1)
        b = plateau(r - self.radius, self.flat, self.width)
        db = plateau_deriv(r - self.radius, self.flat, self.width)
        er = rel / np.maximum(r, 1e-300)[..., None]
        w = self.omega
        skew = np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])
        rot = np.cross(w, rel)
        return rot[..., :, None] * (db[..., None] * er)[..., None, :] + b[..., None, None] * skew


class TangentialField(VelocityField):
    """``weight(x) * (I - n n^T) W(x)`` with ``n`` a unit-normal extension.

    With ``n`` taken from the level set (n = grad phi / |grad phi|) the
    field is tangent to every level surface, in particular to the interface.
    """

    def __init__(self, ambient, normal, weight, support_radius=np.inf):
        self.ambient = ambient
        self.normal = normal
        self.weight = weight
        self.support_radius = support_radius

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        w = self.ambient(x)
        n = self.normal(x)
        tang = w - np.sum(w * n, axis=-1, keepdims=True) * n
        return self.weight(x)[..., None] * tang


def levelset_tube_weight(ls, flat, width):
    """C2 weight equal to 1 for |phi| <= flat and 0 beyond flat + width."""
    return lambda x: plateau(ls(x), flat, width)


def sphere_normal(center):
    center = np.asarray(center, dtype=float)

    def normal(x):
        rel = np.asarray(x, dtype=float) - center
        return rel / np.linalg.norm(rel, axis=-1, keepdims=True)

    return normal


def generic_ambient(seed=0, scale=1.0):
    """A smooth, non-symmetric ambient field built from a few random sinusoids."""
    rng = np.random.default_rng(seed)
    k = rng.normal(size=(3, 3, 3)) * 0.6
    phase = rng.uniform(0, 2 * np.pi, size=(3, 3))
    amp = rng.normal(size=(3, 3)) * scale / 3.0

    def field(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for comp in range(3):
            for m in range(3):
                out[..., comp] += amp[comp, m] * np.sin(x @ k[comp, m] + phase[comp, m])
        return out

    return field
