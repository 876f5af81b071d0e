"""Independent high-precision reference values built on mpmath.

Nothing here imports the package's numerics: the interface value is the
defining Gaussian integral done by ``mpmath.quad``, the point-mass solution
is the two-sided image formula, and the step solution is written from
scratch in terms of ``mpmath.erfc``.
"""
import mpmath as mp

mp.mp.dps = 40


def sigma(eps, q):
    return mp.mpf(eps) ** (1 - 2 * mp.mpf(q))


def interface_value(p0, eps, q, t):
    """``int_0^inf G(xi) exp(-xi^2/4t)/sqrt(pi t) dxi`` with the weighted data ``G``."""
    s = mp.sqrt(sigma(eps, q))
    t = mp.mpf(t)

    def g(xi):
        return (p0(xi) + s * p0(-s * xi)) / (1 + s)

    return mp.quad(lambda xi: g(xi) * mp.exp(-xi ** 2 / (4 * t)), [0, 1, mp.inf]) / mp.sqrt(mp.pi * t)


def point_mass_pressure(x0, eps, q, t, y):
    """Pressure for a unit point mass at ``x0 > 0``."""
    s = mp.sqrt(sigma(eps, q))
    t, y, x0 = mp.mpf(t), mp.mpf(y), mp.mpf(x0)
    k = 1 / mp.sqrt(4 * mp.pi * t)
    if y >= 0:
        r = (1 - s) / (1 + s)
        return k * (mp.exp(-(y - x0) ** 2 / (4 * t)) + r * mp.exp(-(y + x0) ** 2 / (4 * t)))
    return k * 2 / (1 + s) * mp.exp(-(y / s - x0) ** 2 / (4 * t))


def point_mass_interface(x0, eps, q, t):
    s = mp.sqrt(sigma(eps, q))
    t = mp.mpf(t)
    return mp.exp(-mp.mpf(x0) ** 2 / (4 * t)) / ((1 + s) * mp.sqrt(mp.pi * t))


def step_pressure(a, b, eps, q, t, y):
    """Pressure for density data ``a`` on ``x > 0`` and ``b`` on ``x < 0``."""
    s = mp.sqrt(sigma(eps, q))
    bl = mp.mpf(eps) ** mp.mpf(q) * b
    h = (a + s * bl) / (1 + s)
    t, y = mp.mpf(t), mp.mpf(y)
    if y >= 0:
        return a + (h - a) * mp.erfc(y / (2 * mp.sqrt(t)))
    return bl + (h - bl) * mp.erfc(-y / (2 * s * mp.sqrt(t)))


def step_flux_right(a, b, eps, q, t):
    """``p_y(t, 0+)`` for step data."""
    s = mp.sqrt(sigma(eps, q))
    bl = mp.mpf(eps) ** mp.mpf(q) * b
    return s * (a - bl) / ((1 + s) * mp.sqrt(mp.pi * mp.mpf(t)))


def point_mass_flux_right(x0, eps, q, t):
    return mp.diff(lambda y: point_mass_pressure(x0, eps, q, t, y), 0, direction=1)


def heat_kernel(x0, t, x):
    t = mp.mpf(t)
    return mp.exp(-(mp.mpf(x) - x0) ** 2 / (4 * t)) / mp.sqrt(4 * mp.pi * t)


def abel_beta(a, t):
    """``int_0^t tau^a (t - tau)^(-1/2) dtau``."""
    return mp.beta(a + 1, mp.mpf(1) / 2) * mp.mpf(t) ** (a + mp.mpf(1) / 2)
