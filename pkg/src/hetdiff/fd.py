"""Finite-volume theta-scheme for the pressure equation.

Two forms of the same problem are supported:

* ``"y"``: ``p_t = (c p_y)_y`` with ``c = sigma`` left of the interface.
* ``"x"``: ``D^-q p_t = (D^(1-q) p_x)_x`` in the original coordinate.

Cells are centred; the interface is a cell face. The conductance of the
interface face is the half-cell-weighted harmonic mean of the two one-sided
coefficients, so a single flux crosses it and flux continuity holds
discretely. Both truncation ends are zero-flux, which makes the scheme
exactly conservative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg.lapack import dgttrf, dgttrs
from scipy.special import erfcinv

from .closedform import fundamental_solution
from .model import (
    Dirac, InitialData, ModelParams, Quantity, Sampled, Space, Step, Variable,
    initial_pressure, p_to_u, x_to_y, y_to_x,
)

FORMS = ("y", "x")


@dataclass(frozen=True)
class Grid1D:
    left_extent: float
    right_extent: float
    n_left: int
    n_right: int

    def __post_init__(self):
        if self.n_left < 1 or self.n_right < 1:
            raise ValueError("each side needs at least one cell")
        if not (self.left_extent > 0 and self.right_extent > 0):
            raise ValueError("extents must be positive")

    @classmethod
    def from_widths(cls, left_extent, right_extent, dx_left, dx_right):
        """Smallest grid with the requested widths covering both extents."""
        nl = max(1, math.ceil(left_extent / dx_left - 1e-9))
        nr = max(1, math.ceil(right_extent / dx_right - 1e-9))
        return cls(nl * dx_left, nr * dx_right, nl, nr)

    @property
    def dx_left(self) -> float:
        return self.left_extent / self.n_left

    @property
    def dx_right(self) -> float:
        return self.right_extent / self.n_right

    @property
    def n(self) -> int:
        return self.n_left + self.n_right

    @property
    def faces(self) -> np.ndarray:
        left = -self.left_extent + self.dx_left * np.arange(self.n_left)
        right = self.dx_right * np.arange(self.n_right + 1)
        return np.concatenate([left, right])

    @property
    def widths(self) -> np.ndarray:
        return np.concatenate([np.full(self.n_left, self.dx_left),
                               np.full(self.n_right, self.dx_right)])

    @property
    def centers(self) -> np.ndarray:
        left = -self.left_extent + self.dx_left * (np.arange(self.n_left) + 0.5)
        right = self.dx_right * (np.arange(self.n_right) + 0.5)
        return np.concatenate([left, right])

    @property
    def is_left(self) -> np.ndarray:
        return np.arange(self.n) < self.n_left


@dataclass(frozen=True)
class Scheme:
    form: str = "y"
    theta: float = 1.0
    dt: float = 4e-6

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}, got {self.form!r}")
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0.5, 1], got {self.theta}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def space(self) -> Space:
        return Space.Y if self.form == "y" else Space.X


@dataclass(frozen=True)
class SolutionField:
    """Snapshots of a solution over cell centres.

    ``values[k]`` is the field at ``times[k]``; ``variable`` records which
    coordinate the grid is in and whether the values are ``p`` or ``u``.
    """

    variable: Variable
    grid: Grid1D
    params: ModelParams
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise FloatingPointError("solution contains non-finite values")

    @property
    def coordinates(self) -> np.ndarray:
        return self.grid.centers

    def x_coordinates(self) -> np.ndarray:
        c = self.grid.centers
        return c if self.variable.space is Space.X else y_to_x(c, self.params)

    def y_coordinates(self) -> np.ndarray:
        c = self.grid.centers
        return c if self.variable.space is Space.Y else x_to_y(c, self.params)

    def pressure(self) -> np.ndarray:
        if self.variable.quantity is Quantity.PRESSURE_P:
            return self.values
        x = self.x_coordinates()
        return np.asarray(self.values) * np.where(x < 0, self.params.eps_q, 1.0)

    def density(self) -> np.ndarray:
        if self.variable.quantity is Quantity.DENSITY_U:
            return self.values
        return p_to_u(self.values, self.x_coordinates()[None, :], self.params)

    def as_density(self) -> "SolutionField":
        return replace(self, variable=Variable(self.variable.space, Quantity.DENSITY_U),
                       values=self.density())

    def mass(self) -> np.ndarray:
        """``int u dx`` per snapshot (conserved exactly by the scheme)."""
        u = self.density()
        if self.variable.space is Space.X:
            return u @ self.grid.widths
        # dx = D^q dy on the left
        w = self.grid.widths * np.where(self.grid.is_left, self.params.eps_q, 1.0)
        return u @ w


def _coefficients(params: ModelParams, form: str):
    """(left conductivity, left capacity) for the chosen form; right is (1, 1)."""
    if form == "y":
        return params.sigma, 1.0
    return params.eps ** (1.0 - params.q), params.stretch


@dataclass
class Operator:
    """Tridiagonal diffusion operator and capacity for one grid/form."""

    grid: Grid1D
    params: ModelParams
    form: str
    conductance: np.ndarray = field(init=False)
    capacity: np.ndarray = field(init=False)

    def __post_init__(self):
        kl, ml = _coefficients(self.params, self.form)
        left = self.grid.is_left
        k = np.where(left, kl, 1.0)
        h = self.grid.widths
        # interior faces i+1/2; the interface face uses the same half-cell
        # harmonic formula as every other face
        resist = 0.5 * h[:-1] / k[:-1] + 0.5 * h[1:] / k[1:]
        self.conductance = 1.0 / resist
        self.capacity = np.where(left, ml, 1.0) * h

    def apply(self, p: np.ndarray) -> np.ndarray:
        flux = self.conductance * np.diff(p)
        out = np.zeros_like(p)
        out[:-1] += flux
        out[1:] -= flux
        return out

    def system(self, dt: float, theta: float):
        """(lower, diag, upper) of ``capacity/dt - theta * A``."""
        c = self.conductance
        diag = self.capacity / dt
        diag = diag.copy()
        diag[:-1] += theta * c
        diag[1:] += theta * c
        return -theta * c, diag, -theta * c.copy()


def thomas(lower, diag, upper, rhs):
    """Solve a tridiagonal system by forward elimination and back substitution.

    ``lower[i]`` multiplies ``x[i]`` in row ``i+1``; ``upper[i]`` multiplies
    ``x[i+1]`` in row ``i``.
    """
    n = len(diag)
    cp = np.empty(n - 1)
    dp = np.empty(n)
    beta = diag[0]
    if beta == 0:
        raise np.linalg.LinAlgError("singular tridiagonal system")
    dp[0] = rhs[0] / beta
    for i in range(1, n):
        cp[i - 1] = upper[i - 1] / beta
        beta = diag[i] - lower[i - 1] * cp[i - 1]
        if beta == 0:
            raise np.linalg.LinAlgError("singular tridiagonal system")
        dp[i] = (rhs[i] - lower[i - 1] * dp[i - 1]) / beta
    x = dp
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return x


class Stepper:
    """Repeated theta-steps with a factorisation computed once (LAPACK gttrf)."""

    def __init__(self, op: Operator, dt: float, theta: float):
        self.op, self.dt, self.theta = op, dt, theta
        lower, diag, upper = op.system(dt, theta)
        *lu, info = dgttrf(lower, diag, upper)
        if info != 0:
            raise np.linalg.LinAlgError(f"tridiagonal factorisation failed (info={info})")
        self._lu = lu

    def step(self, p: np.ndarray) -> np.ndarray:
        # increment form keeps round-off proportional to the change per step
        rhs = self.op.apply(p)
        inc, info = dgttrs(*self._lu, rhs)
        if info != 0:
            raise np.linalg.LinAlgError(f"tridiagonal solve failed (info={info})")
        return p + inc


def assemble_and_step(field: SolutionField, params: ModelParams, scheme: Scheme) -> SolutionField:
    """Advance the last snapshot of ``field`` by one ``scheme.dt``.

    Uses the plain Thomas sweep; :func:`solve` reuses a LAPACK factorisation.
    """
    if field.variable.quantity is not Quantity.PRESSURE_P:
        field = replace(field, variable=Variable(field.variable.space, Quantity.PRESSURE_P),
                        values=field.pressure())
    op = Operator(field.grid, params, scheme.form)
    lower, diag, upper = op.system(scheme.dt, scheme.theta)
    p = np.asarray(field.values[-1], dtype=float)
    p_next = p + thomas(lower, diag, upper, op.apply(p))
    t_next = float(field.times[-1]) + scheme.dt
    return replace(field, times=np.array([t_next]), values=p_next[None, :])


def truncation_extent(params: ModelParams, t_final: float, tol: float = 1e-8, form: str = "y"):
    """(left, right) extents in the solved variable.

    Each side gets ``k sqrt(t max(c, 1))`` with ``c`` its diffusivity and
    ``k = max(6, 2 erfcinv(tol))``, the distance at which a Gaussian front
    from the interface has decayed below ``tol``.
    """
    if not t_final > 0:
        raise ValueError("t_final must be positive")
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    k = max(6.0, 2.0 * float(erfcinv(tol)))
    kl, ml = _coefficients(params, form)
    c_left = kl / ml
    return k * math.sqrt(t_final * max(c_left, 1.0)), k * math.sqrt(t_final)


def default_grid(params: ModelParams, form: str, dx: float, t_final: float,
                 tol: float = 1e-8, dx_left: float | None = None, x0: float = 0.0) -> Grid1D:
    """Grid with right width ``dx`` and left width scaled by the left diffusion length."""
    left, right = truncation_extent(params, t_final, tol, form)
    right = max(right, x0 + right)
    if dx_left is None:
        kl, ml = _coefficients(params, form)
        dx_left = dx * math.sqrt(kl / ml)
    return Grid1D.from_widths(left, right, dx_left, dx)


def initial_cell_values(init: InitialData, params: ModelParams, grid: Grid1D, form: str,
                        t0: float = 0.0) -> np.ndarray:
    """Cell values of the initial pressure in the solved variable.

    Point masses are replaced by the exact solution at the warm-start time
    ``t0`` (point values at centres).
    """
    c = grid.centers
    if isinstance(init, Dirac):
        if not t0 > 0:
            raise ValueError("a point mass needs a positive warm-start time")
        y = c if form == "y" else x_to_y(c, params)
        return np.asarray(fundamental_solution(init.x0, params, t0, y), dtype=float)
    if isinstance(init, Step):
        return np.where(grid.is_left, params.eps_q * init.b, init.a).astype(float)
    if isinstance(init, Sampled):
        # 4-point Gauss cell averages of D^q phi in the solved variable
        xg, wg = np.polynomial.legendre.leggauss(4)
        h = grid.widths
        pts = c[:, None] + 0.5 * h[:, None] * xg[None, :]
        x = pts if form == "x" else y_to_x(pts, params)
        phi = init(x.ravel()).reshape(x.shape)
        p = np.where(x < 0, params.eps_q, 1.0) * phi
        return 0.5 * (p * wg[None, :]).sum(axis=1)
    raise TypeError(f"unknown initial data {init!r}")


def solve(init: InitialData, params: ModelParams, scheme: Scheme, t_final, grid: Grid1D,
          warm_steps: int = 10) -> SolutionField:
    """March the theta-scheme and record the pressure at the requested times.

    ``t_final`` may be a single time or an increasing sequence of snapshot
    times. Each segment between snapshots is split into whole steps of at
    most ``scheme.dt``.
    """
    times = np.atleast_1d(np.asarray(t_final, dtype=float))
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("snapshot times must be positive and increasing")
    op = Operator(grid, params, scheme.form)
    t = warm_steps * scheme.dt if isinstance(init, Dirac) else 0.0
    if times[0] <= t:
        raise ValueError(f"first snapshot must follow the warm start at t={t}")
    p = initial_cell_values(init, params, grid, scheme.form, t0=t)
    out = []
    stepper = None
    for target in times:
        n = max(1, round((target - t) / scheme.dt))
        dt = (target - t) / n
        if stepper is None or not math.isclose(dt, stepper.dt, rel_tol=1e-12):
            stepper = Stepper(op, dt, scheme.theta)
        for _ in range(n):
            p = stepper.step(p)
        t = float(target)
        out.append(p.copy())
    return SolutionField(Variable(scheme.space, Quantity.PRESSURE_P), grid, params, times,
                         np.array(out))


# quadratic extrapolation to 0 from the first three cells on one side
def _edge_fit(c: np.ndarray, v: np.ndarray):
    coef = np.polyfit(c, v, 2)
    return float(np.polyval(coef, 0.0)), float(np.polyval(np.polyder(coef), 0.0))


def boundary_readouts(field: SolutionField, params: ModelParams, index: int = -1):
    """``(u(0+), du/dx(0+), u(0-))`` by one-sided quadratic extrapolation."""
    g = field.grid
    if g.n_left < 3 or g.n_right < 3:
        raise ValueError("boundary readouts need at least three cells per side")
    p = field.pressure()[index]
    c = g.centers
    # right: u = p and x = y
    u_plus, du_plus = _edge_fit(c[g.n_left:g.n_left + 3], p[g.n_left:g.n_left + 3])
    p_minus, _ = _edge_fit(c[g.n_left - 3:g.n_left], p[g.n_left - 3:g.n_left])
    return u_plus, du_plus, p_minus * params.stretch
