"""Exact solution of the transformed pressure problem.

The pressure ``p(t, y)`` solves ``p_t = (c p_y)_y`` with ``c = sigma`` for
``y < 0`` and ``c = 1`` for ``y > 0``. Each half-line is a Dirichlet heat
problem driven by the common interface value ``h(t)``; flux continuity
``sigma p_y(0-) = p_y(0+)`` pins ``h`` to a Gaussian average of the data::

    h(t) = int_0^inf G(xi) exp(-xi^2 / 4t) / sqrt(pi t) dxi,
    G(xi) = (p0(xi) + sqrt(sigma) p0(-sqrt(sigma) xi)) / (1 + sqrt(sigma)).

For point-mass and step data everything has a closed form. General data
goes through the half-line representation (image-kernel convolution plus a
Duhamel memory term in ``h'``), evaluated by the rules in
:mod:`hetdiff.quadrature`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special

from .errors import AccuracyError, InvalidPointError
from .model import Dirac, InitialData, ModelParams, Sampled, Step, initial_pressure, p_to_u, x_to_y
from .quadrature import gaussian_cutoff, integrate_adaptive, memory_integral

QUAD_TOL = 1e-12
SQRT_PI = math.sqrt(math.pi)
_TINY = 1e-300


def erfc(z):
    """Complementary error function (``scipy.special.erfc``)."""
    return scipy.special.erfc(z)


def phi_kernel(t, x, xi):
    """Dirichlet half-line heat kernel (odd reflection about 0)."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("phi_kernel needs t > 0")
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    c = 1.0 / (2.0 * np.sqrt(np.pi * t))
    return (c * (np.exp(-(x - xi) ** 2 / (4 * t)) - np.exp(-(x + xi) ** 2 / (4 * t))))[()]


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise ValueError("time must be positive")
    return t


def _as_sampled(init: Step) -> Sampled:
    a, b = init.a, init.b
    return Sampled(
        left=lambda y: np.full(np.shape(y), b),
        right=lambda y: np.full(np.shape(y), a),
        bound=init.bound,
    )


class InterfaceValue:
    """The interface pressure ``h(t)`` and its derivative.

    ``init`` is pressure data over ``y`` (see :func:`initial_pressure`).
    Point-mass and step data use exact formulas; sampled data (or
    ``force_quadrature=True`` for steps) uses Gauss panels in
    ``w = xi / (2 sqrt(t))`` truncated where ``exp(-w^2) < tol``.
    """

    def __init__(self, init: InitialData, params: ModelParams, tol: float = QUAD_TOL,
                 force_quadrature: bool = False):
        if force_quadrature and isinstance(init, Step):
            init = _as_sampled(init)
        self.init = init
        self.params = params
        self.tol = tol
        self._rs = params.sqrt_sigma
        self._wmax = gaussian_cutoff(tol)
        self._g0 = self._weight_at_zero()
        self.h0 = self._g0

    def _weight_fn(self):
        rs, f = self._rs, self.init
        return lambda xi: (f.right(xi) + rs * np.asarray(f.left(-rs * xi))) / (1.0 + rs)

    def __call__(self, t):
        t = _check_t(t)
        f, rs = self.init, self._rs
        if isinstance(f, Dirac):
            return (np.exp(-f.x0 ** 2 / (4 * t)) / ((1 + rs) * np.sqrt(np.pi * t)))[()]
        if isinstance(f, Step):
            return (np.zeros_like(t) + (f.a + rs * f.b) / (1 + rs))[()]
        g, g0 = self._weight_fn(), self._g0
        st = np.sqrt(np.atleast_1d(t))

        def integrand(w):
            dg = g(2.0 * w[:, None] * st[None, :]) - g0
            return dg * (2 / SQRT_PI) * np.exp(-w * w)[:, None]

        out = g0 + integrate_adaptive(integrand, 0.0, self._wmax, tol=self.tol)
        return out.reshape(t.shape)[()]

    def derivative(self, t):
        """``h'(t)``, differentiating under the integral for sampled data."""
        t = _check_t(t)
        f = self.init
        if isinstance(f, Dirac):
            return (self(t) * (f.x0 ** 2 / (4 * t * t) - 1 / (2 * t)))[()]
        if isinstance(f, Step):
            return np.zeros_like(t)[()]
        # the constant part g0 integrates to exactly zero against (w^2 - 1/2)
        g, g0 = self._weight_fn(), self._g0
        t1 = np.atleast_1d(t)
        st = np.sqrt(t1)

        def integrand(w):
            ww = w[:, None]
            dg = g(2.0 * ww * st[None, :]) - g0
            return dg * (2 / SQRT_PI) * np.exp(-ww * ww) * (ww * ww - 0.5)

        out = integrate_adaptive(integrand, 0.0, self._wmax, tol=self.tol) / t1
        return out.reshape(t.shape)[()]

    def _weight_at_zero(self) -> float:
        """``h(0+)``: the data's one-sided limits weighted as in ``G``."""
        f = self.init
        if isinstance(f, Dirac):
            return 0.0
        if isinstance(f, Step):
            return (f.a + self._rs * f.b) / (1 + self._rs)
        return float(self._weight_fn()(np.array([_TINY]))[0])

    def bound(self) -> float:
        """Maximum-principle bound on ``|h|``."""
        f, rs = self.init, self._rs
        if isinstance(f, Step):
            return (f.a + rs * f.b) / (1 + rs)
        if isinstance(f, Sampled):
            return f.bound
        return math.inf


def interface_value(init: InitialData, params: ModelParams, t, **kw):
    return InterfaceValue(init, params, **kw)(t)


def interface_value_derivative(init: InitialData, params: ModelParams, t, **kw):
    return InterfaceValue(init, params, **kw).derivative(t)


# -- special solutions -------------------------------------------------------


def fundamental_solution(x0: float, params: ModelParams, t, y):
    """Pressure for a unit point mass released at ``x0 > 0``.

    Continuous at ``y = 0``, where it equals ``h(t)``.
    """
    t = _check_t(t)
    y = np.asarray(y, dtype=float)
    rs = params.sqrt_sigma
    c = 1.0 / (2.0 * np.sqrt(np.pi * t))
    right = c * (np.exp(-(y - x0) ** 2 / (4 * t))
                 + (1 - rs) / (1 + rs) * np.exp(-(y + x0) ** 2 / (4 * t)))
    left = 2 * c / (1 + rs) * np.exp(-(x0 - y / rs) ** 2 / (4 * t))
    return np.where(y >= 0, right, left)[()]


def step_solution(a: float, b: float, params: ModelParams, t, y):
    """Pressure for density data ``a`` on ``x > 0`` and ``b`` on ``x < 0``.

    The interface value is ``(a + sqrt(sigma) eps^q b) / (1 + sqrt(sigma))``,
    the unique value that makes the flux continuous.
    """
    t = _check_t(t)
    y = np.asarray(y, dtype=float)
    if np.any(y == 0):
        raise InvalidPointError("step_solution is evaluated off the interface")
    return _step_pressure(a, params.eps_q * b, params, t, y)


def _step_pressure(a, bl, params, t, y):
    rs = params.sqrt_sigma
    h = (a + rs * bl) / (1 + rs)
    right = a + (h - a) * erfc(y / (2 * np.sqrt(t)))
    left = bl + (h - bl) * erfc(-y / (2 * np.sqrt(params.sigma * t)))
    return np.where(y > 0, right, left)[()]


# -- general representation --------------------------------------------------


@dataclass
class ClosedFormSolution:
    """Evaluator of the exact pressure for one set of pressure-form data.

    ``method="exact"`` uses the point-mass/step formulas; ``"representation"``
    always goes through the half-line representation with numerical memory
    integrals (steps are then treated as sampled data). Sampled data is
    always evaluated by representation.
    """

    params: ModelParams
    init: InitialData
    method: str = "exact"
    tol: float = QUAD_TOL
    interface: InterfaceValue = field(init=False)

    def __post_init__(self):
        if self.method not in ("exact", "representation"):
            raise ValueError(f"unknown method {self.method!r}")
        force = self.method == "representation"
        self.interface = InterfaceValue(self.init, self.params, self.tol, force_quadrature=force)
        self._data = self.interface.init
        self._memo = {}

    @classmethod
    def from_density(cls, init: InitialData, params: ModelParams, **kw):
        return cls(params, initial_pressure(init, params), **kw)

    @property
    def _exact(self) -> bool:
        return self.method == "exact" and isinstance(self._data, (Dirac, Step))

    # memory terms -----------------------------------------------------------

    def _memory_erfc(self, t: float, z):
        """``int_0^t h'(tau) erfc(z / (2 sqrt(t - tau))) dtau`` for ``z > 0``."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if isinstance(self._data, Step):
            return np.zeros_like(z)
        hp = self._hprime_cached(t)
        return memory_integral(
            t, hp, kernel=lambda s: erfc(z[None, :] / (2 * np.sqrt(s[:, None]))), tol=self.tol
        )

    def _hprime_cached(self, t: float):
        # sampled h' is a quadrature per node; memoise per evaluation time
        if isinstance(self._data, Dirac):
            return self.interface.derivative
        cache = self._memo.setdefault(("hp", t), {})

        def hp(tau):
            key = (tau.size, float(tau[0]), float(tau[-1]))
            if key not in cache:
                cache[key] = self.interface.derivative(tau)
            return cache[key]

        return hp

    def memory_flux(self, t: float) -> float:
        """``(1/sqrt(pi)) [int_0^t h'(tau)/sqrt(t-tau) dtau + h(0+)/sqrt(t)]``."""
        if isinstance(self._data, Step):
            body = 0.0
        else:
            body = memory_integral(t, self._hprime_cached(t), kernel=None, tol=self.tol)
        return (body + self.interface.h0 / math.sqrt(t)) / SQRT_PI

    # convolution terms ------------------------------------------------------

    def _conv_right(self, t: float, y):
        """``int_0^inf p0(xi) Phi(t, y, xi) dxi`` for ``y > 0``."""
        f = self._data
        if isinstance(f, Dirac):
            return phi_kernel(t, y, f.x0)
        if isinstance(f, Step):
            return f.a * scipy.special.erf(y / (2 * math.sqrt(t)))
        return self._conv_sampled(f.right, t, y)

    def _conv_left(self, t: float, y):
        """``int_0^inf p0(-xi) Phi(sigma t, -y, xi) dxi`` for ``y < 0``."""
        f = self._data
        if isinstance(f, Dirac):
            return np.zeros_like(y)
        st = self.params.sigma * t
        if isinstance(f, Step):
            return f.b * scipy.special.erf(-y / (2 * math.sqrt(st)))
        return self._conv_sampled(lambda z: f.left(-z), st, -y)

    def _conv_sampled(self, g, t, z):
        # int_0^inf g(xi) [G(z - xi) - G(z + xi)] dxi with xi = z +/- 2 sqrt(t) w
        z = np.atleast_1d(z)
        st = 2 * math.sqrt(t)
        wmax = gaussian_cutoff(self.tol)
        out = np.empty_like(z)
        for i, zi in enumerate(z):
            lo = max(-zi / st, -wmax)

            def direct(w):
                return g(zi + st * w) * np.exp(-w * w) / SQRT_PI

            def image(w):
                return g(st * w - zi) * np.exp(-w * w) / SQRT_PI

            val = integrate_adaptive(direct, lo, wmax, tol=self.tol) if lo < wmax else 0.0
            lo2 = zi / st
            img = integrate_adaptive(image, lo2, wmax, tol=self.tol) if lo2 < wmax else 0.0
            out[i] = val - img
        return out

    # public evaluation ------------------------------------------------------

    def pressure(self, t: float, y):
        """``p(t, y)`` for scalar ``t > 0`` and ``y != 0`` (scalar or array)."""
        t = float(_check_t(t))
        y = np.asarray(y, dtype=float)
        if np.any(y == 0):
            raise InvalidPointError("pressure is evaluated off the interface; use interface(t)")
        if self._exact:
            f = self._data
            if isinstance(f, Dirac):
                return fundamental_solution(f.x0, self.params, t, y)
            return _step_pressure(f.a, f.b, self.params, t, y)
        flat = np.atleast_1d(y).ravel()
        out = np.empty_like(flat)
        h0 = self.interface.h0
        pos, neg = flat > 0, flat < 0
        if pos.any():
            yp = flat[pos]
            out[pos] = (self._conv_right(t, yp) + self._memory_erfc(t, yp)
                        + h0 * erfc(yp / (2 * math.sqrt(t))))
        if neg.any():
            yn = flat[neg]
            zs = -yn / math.sqrt(self.params.sigma)
            out[neg] = (self._conv_left(t, yn) + self._memory_erfc(t, zs)
                        + h0 * erfc(zs / (2 * math.sqrt(t))))
        return out.reshape(y.shape)[()]

    def density(self, t: float, x):
        """``u(t, x)`` in the original variables (``x != 0``)."""
        x = np.asarray(x, dtype=float)
        return p_to_u(self.pressure(t, x_to_y(x, self.params)), x, self.params)

    def _p0_flux_right(self, t: float) -> float:
        f = self._data
        if isinstance(f, Dirac):
            return f.x0 / (2 * math.sqrt(math.pi * t ** 3)) * math.exp(-f.x0 ** 2 / (4 * t))
        if isinstance(f, Step):
            return f.a / math.sqrt(math.pi * t)
        st = math.sqrt(t)
        return float(integrate_adaptive(
            lambda w: f.right(2 * st * w) * 2 * w / math.sqrt(math.pi * t) * np.exp(-w * w),
            0.0, gaussian_cutoff(self.tol), tol=self.tol))

    def _p0_flux_left(self, t: float) -> float:
        f, rs = self._data, self.params.sqrt_sigma
        if isinstance(f, Dirac):
            return 0.0
        if isinstance(f, Step):
            return f.b / math.sqrt(math.pi * self.params.sigma * t)
        st = math.sqrt(t)
        return float(integrate_adaptive(
            lambda w: np.asarray(f.left(-2 * rs * st * w)) * 2 * w / math.sqrt(math.pi * t)
            * np.exp(-w * w),
            0.0, gaussian_cutoff(self.tol), tol=self.tol)) / rs

    def flux_right(self, t: float) -> float:
        """``p_y(t, 0+)`` from the one-sided derivative of the representation."""
        t = float(_check_t(t))
        return self._p0_flux_right(t) - self.memory_flux(t)

    def flux_left(self, t: float) -> float:
        """``p_y(t, 0-)``."""
        t = float(_check_t(t))
        return -self._p0_flux_left(t) + self.memory_flux(t) / self.params.sqrt_sigma


def eval_pressure(sol: ClosedFormSolution, t, y):
    return sol.pressure(t, y)


def flux_right(sol: ClosedFormSolution, t) -> float:
    return sol.flux_right(t)


def flux_left(sol: ClosedFormSolution, t) -> float:
    return sol.flux_left(t)


# one-sided stencils for f''(0) from samples at k*d, k = 1..4 (cubic fit)
_D2_STENCIL = np.linalg.solve(
    np.vander(np.arange(1.0, 5.0), 4, increasing=True).T, np.array([0.0, 0.0, 2.0, 0.0])
)


def _one_sided_second(f, sign: float, d: float) -> float:
    k = np.arange(1.0, 5.0)
    vals = f(sign * k * d)
    return float(_D2_STENCIL @ vals) / d ** 2


def second_derivative_identity(sol: ClosedFormSolution, t: float, rel_step: float = 0.05,
                               rungs: int = 3, tol: float = 1e-4):
    """``(sigma p_yy(0-), p_yy(0+), h'(t))``.

    Each one-sided second derivative comes from a four-point one-sided
    stencil on a halving ladder of steps (starting at
    ``rel_step * sqrt(t)``) followed by Richardson extrapolation of the
    second-order stencil error.
    """
    t = float(_check_t(t))

    def ladder(sign, scale):
        d0 = rel_step * math.sqrt(t * scale)
        est = [_one_sided_second(lambda y: sol.pressure(t, y), sign, d0 / 2 ** k)
               for k in range(rungs)]
        table = list(est)
        for level in range(1, rungs):
            fac = 2 ** (2 + level - 1)
            table = [(fac * table[i + 1] - table[i]) / (fac - 1) for i in range(len(table) - 1)]
        return table[0]

    right = ladder(1.0, 1.0)
    left = ladder(-1.0, sol.params.sigma)
    hp = float(sol.interface.derivative(t))
    if not math.isfinite(right) or not math.isfinite(left):
        raise AccuracyError("finite-difference ladder produced non-finite values", math.inf)
    return sol.params.sigma * left, right, hp
