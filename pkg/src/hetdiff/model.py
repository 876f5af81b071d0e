"""Model parameters, the two-level diffusivity and the (x, u) <-> (y, p) maps.

The diffusivity is ``eps`` on ``x < 0`` and ``1`` on ``x > 0``. The pressure
``p = D**q * u`` is continuous across the interface, and in the stretched
coordinate ``y = int_0^x D**(-q)`` it solves a conservative heat equation
with coefficient ``sigma = eps**(1 - 2q)`` on the left.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Union

import numpy as np

from .errors import InvalidPointError

EPS_MIN = 1e-12
EPS_MAX = 10.0


def sigma_of(eps: float, q: float) -> float:
    """Left coefficient ``eps**(1 - 2q)`` of the pressure equation in ``y``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    try:
        s = math.pow(eps, 1.0 - 2.0 * q)
    except OverflowError:
        raise OverflowError(f"eps**(1-2q) overflows for eps={eps}, q={q}") from None
    if not math.isfinite(s) or s == 0.0:
        raise OverflowError(f"eps**(1-2q) is not representable for eps={eps}, q={q}")
    return s


@dataclass(frozen=True)
class ModelParams:
    """Heterogeneity parameters ``(eps, q)``.

    ``sigma`` and the power factors are derived on construction; the object
    is immutable so they can never go stale.
    """

    eps: float
    q: float
    eps_min: float = field(default=EPS_MIN, repr=False, compare=False)
    eps_max: float = field(default=EPS_MAX, repr=False, compare=False)

    def __post_init__(self):
        if not math.isfinite(self.q):
            raise ValueError(f"q must be finite, got {self.q}")
        if not (self.eps_min < self.eps < self.eps_max):
            raise ValueError(
                f"eps={self.eps} outside the validated range "
                f"({self.eps_min}, {self.eps_max})"
            )
        # stretch factor eps**(-q) for x<0; every left-side map divides or
        # multiplies by this one number so round trips stay within ulps
        stretch = math.pow(self.eps, -self.q)
        if not math.isfinite(stretch) or stretch == 0.0:
            raise OverflowError(f"eps**(-q) not representable for {self}")
        object.__setattr__(self, "_stretch", stretch)
        object.__setattr__(self, "_sigma", sigma_of(self.eps, self.q))

    @property
    def sigma(self) -> float:
        return self._sigma

    @property
    def sqrt_sigma(self) -> float:
        return math.sqrt(self._sigma)

    @property
    def stretch(self) -> float:
        """``eps**(-q)``: dy/dx on the left half-line."""
        return self._stretch

    @property
    def eps_q(self) -> float:
        """``eps**q``: the pressure factor ``D**q`` on the left half-line."""
        return 1.0 / self._stretch

    def with_eps(self, eps: float) -> "ModelParams":
        return replace(self, eps=eps)


class Diffusivity:
    """``D(x)``: ``eps`` for ``x < 0`` and ``1`` for ``x > 0``; undefined at 0."""

    def __init__(self, params: ModelParams):
        self.params = params

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        _reject_origin(x)
        return np.where(x < 0, self.params.eps, 1.0)[()]


def _reject_origin(x):
    if np.any(x == 0):
        raise InvalidPointError("D(x) is undefined at the interface x == 0")


def x_to_y(x, params: ModelParams):
    """Stretched coordinate: ``y = x`` for ``x >= 0``, ``eps**(-q) x`` otherwise."""
    x = np.asarray(x, dtype=float)
    return np.where(x < 0, x * params.stretch, x)[()]


def y_to_x(y, params: ModelParams):
    """Inverse of :func:`x_to_y`."""
    y = np.asarray(y, dtype=float)
    return np.where(y < 0, y / params.stretch, y)[()]


def u_to_p(u, x, params: ModelParams):
    """Pressure ``D(x)**q * u``; ``x`` must avoid the interface."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    _reject_origin(x)
    return np.where(x < 0, u / params.stretch, u)[()]


def p_to_u(p, x, params: ModelParams):
    """Density ``D(x)**(-q) * p``; inverse of :func:`u_to_p` at the same ``x``."""
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    _reject_origin(x)
    return np.where(x < 0, p * params.stretch, p)[()]


# -- initial data ------------------------------------------------------------


@dataclass(frozen=True)
class Dirac:
    """Unit point mass at ``x0 > 0``."""

    x0: float

    def __post_init__(self):
        if not (self.x0 > 0 and math.isfinite(self.x0)):
            raise ValueError(f"Dirac location must be positive, got {self.x0}")


@dataclass(frozen=True)
class Step:
    """``a`` on the right half-line and ``b`` on the left."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a >= 0 and self.b >= 0):
            raise ValueError(f"step values must be nonnegative, got {self.a}, {self.b}")

    @property
    def bound(self) -> float:
        return max(self.a, self.b)


@dataclass(frozen=True)
class Sampled:
    """Bounded data given by one vectorised callable per half-line.

    ``left`` is only ever called with negative arguments and ``right`` with
    positive ones, so unequal one-sided limits at 0 are fine.
    """

    left: Callable[[np.ndarray], np.ndarray]
    right: Callable[[np.ndarray], np.ndarray]
    bound: float

    def __post_init__(self):
        if not self.bound >= 0:
            raise ValueError(f"bound must be nonnegative, got {self.bound}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        _reject_origin(x)
        out = np.empty_like(x)
        neg = x < 0
        out[neg] = self.left(x[neg])
        out[~neg] = self.right(x[~neg])
        return out[()]


InitialData = Union[Dirac, Step, Sampled]


def initial_pressure(init: InitialData, params: ModelParams) -> InitialData:
    """Rewrite density initial data as pressure data over ``y``."""
    if isinstance(init, Dirac):
        return init
    if isinstance(init, Step):
        return Step(init.a, params.eps_q * init.b)
    if isinstance(init, Sampled):
        f, eq = init.left, params.eps_q
        return Sampled(
            left=lambda y: eq * np.asarray(f(y * eq)),
            right=init.right,
            bound=init.bound * max(1.0, eq),
        )
    raise TypeError(f"unknown initial data {init!r}")


class Space(enum.Enum):
    X = "x"
    Y = "y"


class Quantity(enum.Enum):
    DENSITY_U = "u"
    PRESSURE_P = "p"


@dataclass(frozen=True)
class Variable:
    space: Space
    quantity: Quantity

    @property
    def label(self) -> str:
        return f"{self.quantity.value}({self.space.value})"
