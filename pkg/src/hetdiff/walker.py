"""Position-jump random walk with a two-level walk length and sojourn time.

A particle at ``x`` waits ``tau(x) delta**2`` and then jumps ``+-ell(x) delta``
with equal probability; both values are read at the departure point, and the
interface site ``x = 0`` steps to its nearest neighbour on either side, so the
walk lives on the lattice ``{k delta} U {-j eta delta}``. The
right half-line uses ``ell = 1, tau = 0.5`` (unit diffusivity). The left uses
``ell = eta = eps**(1-q)`` and ``tau = 0.5 * zeta`` with ``zeta = sigma``, the
sojourn time measured in units of the right one, which gives diffusivity
``eps`` there and reproduces the diffusion law with exponent ``q``.

Runs of jumps that cannot reach the interface are drawn in one go from a
binomial, which is exact in distribution.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import Dirac, InitialData, ModelParams, Sampled, Step

TAU_RIGHT = 0.5
BLOCK = 1 << 16
# jumps landing within this many ulps of T still count
_CLOCK_SLACK = 1e-9


@dataclass(frozen=True)
class WalkRule:
    eta: float
    zeta: float
    delta: float

    def __post_init__(self):
        if not (self.eta > 0 and self.zeta > 0 and self.delta > 0):
            raise ValueError("eta, zeta and delta must be positive")

    @property
    def tau_left(self) -> float:
        return TAU_RIGHT * self.zeta

    @property
    def diffusivity_left(self) -> float:
        return self.eta ** 2 / (2 * self.tau_left)

    @property
    def diffusivity_right(self) -> float:
        return 1.0 / (2 * TAU_RIGHT)

    @property
    def homogeneous(self) -> bool:
        return self.eta == 1.0 and self.zeta == 1.0

    # coefficients of the limiting law u_t = (K (M u)_x)_x / 2
    def walk_length(self, x):
        return np.where(np.asarray(x) <= 0, self.eta, 1.0)

    def sojourn(self, x):
        return np.where(np.asarray(x) <= 0, self.tau_left, TAU_RIGHT)

    def mobility(self, x):
        """``M = ell / tau``."""
        return self.walk_length(x) / self.sojourn(x)


def walk_rule_from_params(params: ModelParams, delta: float = 0.01) -> WalkRule:
    eta = params.eps ** (1.0 - params.q)
    if not math.isfinite(eta) or eta == 0:
        raise OverflowError(f"eps**(1-q) not representable for {params}")
    return WalkRule(eta=eta, zeta=params.sigma, delta=delta)


@dataclass(frozen=True)
class Ensemble:
    positions: np.ndarray
    clocks: np.ndarray
    seed: int
    horizon: float
    mass: float = 1.0

    @property
    def n(self) -> int:
        return self.positions.size


def max_threads() -> int:
    env = os.environ.get("HETDIFF_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


def _sample_initial(init: InitialData, n: int, rng, window):
    """Continuous initial positions and the total initial mass."""
    if isinstance(init, Dirac):
        return np.full(n, float(init.x0)), 1.0
    lo, hi = window
    if isinstance(init, Step):
        ml, mr = init.b * lo, init.a * hi
        total = ml + mr
        if total <= 0:
            raise ValueError("step data has zero mass on the sampling window")
        right = rng.random(n) < mr / total
        u = rng.random(n)
        return np.where(right, u * hi, -u * lo), total
    if isinstance(init, Sampled):
        if init.bound <= 0:
            raise ValueError("sampled data has zero bound")
        out = np.empty(n)
        filled = 0
        while filled < n:
            m = 2 * (n - filled) + 16
            x = rng.uniform(-lo, hi, m)
            x = x[x != 0]
            keep = x[rng.random(x.size) * init.bound < init(x)]
            take = min(keep.size, n - filled)
            out[filled:filled + take] = keep[:take]
            filled += take
        # mass of phi on the window by a midpoint sum
        grid = np.linspace(-lo, hi, 20001)
        mid = 0.5 * (grid[1:] + grid[:-1])
        mid = mid[mid != 0]
        return out, float(np.sum(init(mid)) * (lo + hi) / mid.size)
    raise TypeError(f"unknown initial data {init!r}")


def to_site(rule: WalkRule, x) -> np.ndarray:
    """Nearest lattice site: ``k delta`` for ``k >= 0``, ``k eta delta`` for ``k < 0``."""
    x = np.asarray(x, dtype=float)
    scale = np.where(x < 0, rule.eta * rule.delta, rule.delta)
    return np.rint(x / scale).astype(np.int64)


def site_position(rule: WalkRule, k) -> np.ndarray:
    k = np.asarray(k)
    return np.where(k < 0, k * (rule.eta * rule.delta), k * rule.delta)


def _walk(rule: WalkRule, k: np.ndarray, horizon: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Advance lattice indices until each particle's next jump would pass ``horizon``.

    Sites ``k > 0`` use the right rule, ``k < 0`` the left one. The
    interface site ``k = 0`` waits the left sojourn time and steps to its
    neighbour on either side. Every jump connects neighbouring sites, so the
    chain is a reversible birth-death process.
    """
    k = k.copy()
    clock = np.zeros(k.size)
    d2 = rule.delta ** 2
    dt_r, dt_l = TAU_RIGHT * d2, rule.tau_left * d2
    idx = np.arange(k.size)
    while idx.size:
        ki = k[idx]
        dtau = np.where(ki > 0, dt_r, dt_l)
        remaining = np.floor((horizon - clock[idx]) / dtau + _CLOCK_SLACK)
        alive = remaining >= 1
        if not alive.all():
            idx, ki, dtau, remaining = idx[alive], ki[alive], dtau[alive], remaining[alive]
            if not idx.size:
                break
        if rule.homogeneous:
            m = remaining
        else:
            # every departure site of the run stays on the current side
            m = np.clip(np.minimum(remaining, np.abs(ki)), 1, None)
        m = m.astype(np.int64)
        ups = rng.binomial(m, 0.5)
        k[idx] = ki + 2 * ups - m
        clock[idx] += m * dtau
    return k, clock


def simulate(rule: WalkRule, init: InitialData, n_particles: int, T: float, seed: int,
             window=(3.0, 3.0), threads: int | None = None) -> Ensemble:
    """Run ``n_particles`` independent walkers up to time ``T``.

    Particles are processed in fixed blocks, each with its own Philox
    stream keyed by ``(seed, block)``, so results do not depend on the
    number of threads. ``window`` bounds the sampling region for step and
    sampled data (left extent, right extent).
    """
    if n_particles < 1:
        raise ValueError("need at least one particle")
    if not T > 0:
        raise ValueError("horizon must be positive")
    if min(TAU_RIGHT, rule.tau_left) * rule.delta ** 2 >= T:
        raise ValueError("delta too large: no jump fits before the horizon")
    starts = list(range(0, n_particles, BLOCK))

    def run(b):
        rng = _block_rng(seed, b)
        n = min(BLOCK, n_particles - starts[b])
        x0, mass = _sample_initial(init, n, rng, window)
        k, clk = _walk(rule, to_site(rule, x0), T, rng)
        return site_position(rule, k), clk, mass

    workers = min(threads or max_threads(), len(starts))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(len(starts))))
    else:
        parts = [run(b) for b in range(len(starts))]
    pos = np.concatenate([p[0] for p in parts])
    clk = np.concatenate([p[1] for p in parts])
    sizes = np.array([p[0].size for p in parts], dtype=float)
    mass = float(np.sum(sizes * np.array([p[2] for p in parts])) / n_particles)
    return Ensemble(pos, clk, int(seed), float(T), mass)


@dataclass(frozen=True)
class DensityEstimate:
    edges: np.ndarray
    values: np.ndarray
    horizon: float
    outside: float

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def integral(self) -> float:
        return float(self.values @ self.widths)


def default_bins(rule: WalkRule, lo: float, hi: float, per_bin: int = 4) -> np.ndarray:
    """Edges grouping ``per_bin`` whole lattice cells per bin on each side.

    Every edge falls halfway between neighbouring sites. The interface site
    opens the first right-hand bin, whose lower edge is ``-eta delta / 2``.
    Walkers with equal clocks share a parity, so only every other site is
    occupied at a given time; an even ``per_bin`` keeps both parities in
    every bin.
    """
    if per_bin < 2 or per_bin % 2 or not lo < 0 < hi:
        raise ValueError("need an even per_bin >= 2 and lo < 0 < hi")
    d, dl = rule.delta, rule.eta * rule.delta
    nr = math.ceil((hi / d + 0.5) / per_bin)
    nl = math.ceil((-lo / dl - 0.5) / per_bin)
    right = (per_bin * np.arange(1, nr + 1) - 0.5) * d
    left = -(per_bin * np.arange(nl, -1, -1) + 0.5) * dl
    return np.concatenate([left, right])


def density(ens: Ensemble, bins) -> DensityEstimate:
    """Histogram density of the ensemble, scaled by its initial mass.

    Lattice walkers can sit exactly on a bin edge; such a particle is split
    evenly between the two neighbouring bins.
    """
    if ens.n == 0:
        raise ValueError("empty ensemble")
    edges = np.asarray(bins, dtype=float)
    widths = np.diff(edges)
    if edges.ndim != 1 or edges.size < 2 or np.any(widths <= 0):
        raise ValueError("bin edges must be strictly increasing")
    nudge = 1e-9 * float(widths.min())
    lo_counts, _ = np.histogram(ens.positions, edges - nudge)
    hi_counts, _ = np.histogram(ens.positions, edges + nudge)
    counts = 0.5 * (lo_counts + hi_counts)
    values = counts * ens.mass / (ens.n * widths)
    outside = ens.mass * (1.0 - counts.sum() / ens.n)
    return DensityEstimate(edges, values, ens.horizon, outside)


def l1_distance(est: DensityEstimate, exact, exact_mass: float = 1.0, order: int = 8) -> float:
    """``int |histogram - exact|`` over the real line.

    Inside the bins the piecewise-constant estimate is compared with the
    exact density by Gauss-Legendre per bin; outside, the exact and
    estimated tail masses are added.
    """
    xg, wg = np.polynomial.legendre.leggauss(order)
    a, b = est.edges[:-1, None], est.edges[1:, None]
    pts = a + 0.5 * (b - a) * (xg + 1.0)
    vals = np.asarray(exact(pts.ravel())).reshape(pts.shape)
    inside = 0.5 * (b - a)[:, 0] * (np.abs(vals - est.values[:, None]) * wg).sum(axis=1)
    covered = 0.5 * (b - a)[:, 0] * (vals * wg).sum(axis=1)
    return float(inside.sum() + abs(exact_mass - covered.sum()) + abs(est.outside))


def left_mass_fraction(ens: Ensemble) -> float:
    """Share of particles on ``x < 0``; those at the interface count half."""
    pos = ens.positions
    return float((np.count_nonzero(pos < 0) + 0.5 * np.count_nonzero(pos == 0)) / ens.n)
