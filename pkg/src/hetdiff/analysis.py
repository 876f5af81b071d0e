"""Epsilon sweeps of boundary quantities and power-law fits.

A sweep evaluates ``u(t, 0+)`` or ``du/dx(t, 0+)`` for each ``eps`` on a grid
using one of four sources, and a fit reads off the exponent ``k`` in
``observable ~ C eps**k``. The decaying observable is the boundary value for
``q > 0.5`` and the boundary slope for ``q < 0.5``.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fd, walker
from .closedform import ClosedFormSolution
from .errors import DomainError
from .model import EPS_MAX, EPS_MIN, Dirac, InitialData, ModelParams, Step

# low-eps sub-windows used where the log-log curve bends near q = 0.5
SUB_WINDOW_VALUE = (1e-4, 1e-2)
SUB_WINDOW_SLOPE = (1e-4, 1e-3)
ASYMPTOTIC_WINDOW = (1e-6, 1e-3)
NEAR_NEUTRAL = 0.15
MIN_FIT_POINTS = 5
WALKER_EPS_MIN = 1e-2


class Source(enum.Enum):
    CLOSED_FORM = "closed"
    FD_Y = "fd-y"
    FD_X = "fd-x"
    WALKER = "walker"


class Observable(enum.Enum):
    BOUNDARY_VALUE = "value"
    BOUNDARY_SLOPE = "slope"


def decaying_observable(q: float) -> Observable:
    """The observable that vanishes as ``eps -> 0`` for this ``q``."""
    if q == 0.5:
        raise ValueError("q = 0.5 has no decaying boundary observable")
    return Observable.BOUNDARY_VALUE if q > 0.5 else Observable.BOUNDARY_SLOPE


def sub_window(q: float) -> tuple:
    return SUB_WINDOW_VALUE if q > 0.5 else SUB_WINDOW_SLOPE


def default_t_obs(observable: Observable) -> float:
    return 0.01 if observable is Observable.BOUNDARY_VALUE else 0.1


def default_init(observable: Observable) -> InitialData:
    """Unit step for boundary values; a point mass at 1 for boundary slopes."""
    if observable is Observable.BOUNDARY_VALUE:
        return Step(1.0, 1.0)
    return Dirac(1.0)


def log_grid(lo: float = 1e-4, hi: float = 1.0, n: int = 50) -> np.ndarray:
    return np.logspace(math.log10(lo), math.log10(hi), n)


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: ``q``, the eps grid, where values come from and what is read.

    ``init`` and ``t_obs`` default to :func:`default_init` and
    :func:`default_t_obs` for the observable. ``dx`` is the FD right-side
    width; ``delta``, ``n_particles`` and ``seed`` configure walker sweeps.
    """

    q: float
    eps: tuple = field(default_factory=lambda: tuple(log_grid()))
    source: Source = Source.CLOSED_FORM
    observable: Observable = Observable.BOUNDARY_VALUE
    t_obs: float | None = None
    init: InitialData | None = None
    dx: float = 0.002
    delta: float = 0.01
    n_particles: int = 200_000
    seed: int = 0

    def __post_init__(self):
        eps = np.asarray(self.eps, dtype=float)
        object.__setattr__(self, "eps", tuple(float(e) for e in eps))
        if eps.ndim != 1 or eps.size == 0:
            raise ValueError("eps grid must be a nonempty list")
        d = np.diff(eps)
        if eps.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("eps grid must be strictly monotone")
        if np.any(eps <= EPS_MIN) or np.any(eps >= EPS_MAX):
            raise ValueError(f"eps grid must lie in ({EPS_MIN}, {EPS_MAX})")
        if self.source is Source.WALKER and eps.min() < WALKER_EPS_MIN:
            raise ValueError(f"walker sweeps are limited to eps >= {WALKER_EPS_MIN}")
        if self.t_obs is None:
            object.__setattr__(self, "t_obs", default_t_obs(self.observable))
        if not self.t_obs > 0:
            raise ValueError("t_obs must be positive")
        if self.init is None:
            object.__setattr__(self, "init", default_init(self.observable))

    @property
    def low_precision(self) -> bool:
        return self.source is Source.WALKER


@dataclass(frozen=True)
class SweepTable:
    spec: SweepSpec
    eps: np.ndarray
    values: np.ndarray
    errors: tuple

    @property
    def ok(self) -> np.ndarray:
        return np.isfinite(self.values)


def _closed_form(spec: SweepSpec, params: ModelParams) -> float:
    sol = ClosedFormSolution.from_density(spec.init, params)
    if spec.observable is Observable.BOUNDARY_VALUE:
        # u = p on the right and p(t, 0) = h(t)
        return float(sol.interface(spec.t_obs))
    return float(sol.flux_right(spec.t_obs))


def _fd(spec: SweepSpec, params: ModelParams, form: str) -> float:
    x0 = spec.init.x0 if isinstance(spec.init, Dirac) else 0.0
    grid = fd.default_grid(params, form, spec.dx, spec.t_obs, x0=x0)
    scheme = fd.Scheme(form=form, theta=1.0, dt=spec.dx ** 2)
    field_ = fd.solve(spec.init, params, scheme, spec.t_obs, grid)
    u_plus, du_plus, _ = fd.boundary_readouts(field_, params)
    return u_plus if spec.observable is Observable.BOUNDARY_VALUE else du_plus


def _walker(spec: SweepSpec, params: ModelParams) -> float:
    rule = walker.walk_rule_from_params(params, spec.delta)
    ens = walker.simulate(rule, spec.init, spec.n_particles, spec.t_obs, spec.seed)
    est = walker.density(ens, walker.default_bins(rule, -1.0, 1.0 + _reach(spec.init)))
    # quadratic through the right-side bins within a fixed distance of 0
    reach = min(0.3, 3.0 * math.sqrt(spec.t_obs))
    near = (est.centers > 0) & (est.centers < reach)
    if near.sum() < 4:
        raise ValueError("walker bins too coarse for a boundary readout")
    coef = np.polyfit(est.centers[near], est.values[near], 2)
    if spec.observable is Observable.BOUNDARY_VALUE:
        return float(np.polyval(coef, 0.0))
    return float(np.polyval(np.polyder(coef), 0.0))


def _reach(init: InitialData) -> float:
    return init.x0 if isinstance(init, Dirac) else 0.0


def evaluate(spec: SweepSpec, eps: float) -> float:
    """The observable for a single ``eps``."""
    params = ModelParams(eps, spec.q)
    if spec.source is Source.CLOSED_FORM:
        return _closed_form(spec, params)
    if spec.source is Source.FD_Y:
        return _fd(spec, params, "y")
    if spec.source is Source.FD_X:
        return _fd(spec, params, "x")
    return _walker(spec, params)


def run_sweep(spec: SweepSpec, threads: int | None = None) -> SweepTable:
    """Evaluate the observable over the eps grid.

    Each eps runs independently; a failure is stored as ``nan`` with its
    message in ``errors`` instead of aborting the sweep.
    """
    def one(e):
        try:
            return evaluate(spec, e), ""
        except (ArithmeticError, ValueError) as exc:
            return math.nan, f"{type(exc).__name__}: {exc}"

    workers = min(threads or walker.max_threads(), len(spec.eps))
    if workers > 1 and spec.source is not Source.WALKER:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, spec.eps))
    else:
        results = [one(e) for e in spec.eps]
    values = np.array([r[0] for r in results])
    return SweepTable(spec, np.array(spec.eps), values, tuple(r[1] for r in results))


@dataclass(frozen=True)
class PowerLawFit:
    """``log value = c + k log eps`` fitted by least squares on ``window``."""

    k: float
    c: float
    window: tuple
    residual: float
    n_points: int

    def predict(self, eps):
        return np.exp(self.c) * np.asarray(eps) ** self.k


def fit_power_law(eps, values, window=None) -> PowerLawFit:
    """Fit ``values ~ exp(c) eps**k`` using the points with ``eps`` in ``window``.

    ``window`` is inclusive; ``None`` means all points. Failed (``nan``)
    points are skipped; nonpositive values raise :class:`DomainError`.
    """
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is None:
        window = (float(eps.min()), float(eps.max()))
    lo, hi = window
    rel = 1e-9
    inside = (eps >= lo * (1 - rel)) & (eps <= hi * (1 + rel)) & ~np.isnan(values)
    if np.any(values[inside] <= 0):
        raise DomainError("power-law fit needs positive values inside the window")
    n = int(inside.sum())
    if n < MIN_FIT_POINTS:
        raise ValueError(f"need at least {MIN_FIT_POINTS} points in the window, got {n}")
    le, lv = np.log(eps[inside]), np.log(values[inside])
    k, c = np.polyfit(le, lv, 1)
    resid = lv - (c + k * le)
    return PowerLawFit(float(k), float(c), (float(lo), float(hi)),
                       float(np.sqrt(np.mean(resid ** 2))), n)


def fit_table(table: SweepTable, window=None) -> PowerLawFit:
    return fit_power_law(table.eps, table.values, window)


def fit_report(table: SweepTable) -> dict:
    """The full-grid fit, plus a fit on the low-eps sub-window near ``q = 0.5``."""
    out = {"full": fit_table(table)}
    if abs(table.spec.q - 0.5) < NEAR_NEUTRAL:
        try:
            out["sub"] = fit_table(table, sub_window(table.spec.q))
        except ValueError:
            pass
    return out


@dataclass(frozen=True)
class CurvePoint:
    q: float
    fit: PowerLawFit | None
    error: str = ""

    @property
    def k(self) -> float:
        return self.fit.k if self.fit is not None else math.nan


def exponent_curve(q_grid, source: Source = Source.CLOSED_FORM, window=ASYMPTOTIC_WINDOW,
                   n_eps: int = 50, threads: int | None = None, **spec_kw) -> list:
    """Fitted exponent for each ``q``, using that ``q``'s decaying observable.

    The eps grid is ``n_eps`` log-spaced points spanning ``window``.
    """
    eps = tuple(log_grid(window[0], window[1], n_eps))
    out = []
    for q in q_grid:
        q = float(q)
        if abs(q - 0.5) < 0.02:
            raise ValueError(f"q={q} is within 0.02 of 0.5")
        try:
            spec = SweepSpec(q=q, eps=eps, source=source,
                             observable=decaying_observable(q), **spec_kw)
            out.append(CurvePoint(q, fit_table(run_sweep(spec, threads), window)))
        except (ArithmeticError, ValueError) as exc:
            out.append(CurvePoint(q, None, f"{type(exc).__name__}: {exc}"))
    return out


def linear_trend(curve) -> tuple:
    """Least-squares slope and intercept of ``k`` against ``|q - 0.5|``."""
    pts = [(abs(p.q - 0.5), p.k) for p in curve if p.fit is not None]
    if len(pts) < 2:
        raise ValueError("need at least two fitted points")
    a, k = np.array(pts).T
    slope, icpt = np.polyfit(a, k, 1)
    return float(slope), float(icpt)
