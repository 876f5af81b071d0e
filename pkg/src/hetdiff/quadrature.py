"""Composite Gauss rules used by the closed-form evaluator.

Two families:

* Gaussian-weighted half-line integrals ``int_lo^W f(w) exp(-w^2) dw`` with a
  hard cutoff ``W = sqrt(ln(1/tol))``; panels are doubled until two
  successive sums agree.
* Memory integrals over ``tau in [0, t]`` whose kernel depends on
  ``s = t - tau``. The panel mesh is graded geometrically toward both ends,
  and ``s`` is carried separately from ``tau`` so nodes near ``tau = t`` keep
  full relative precision. The panel touching ``tau = t`` can use
  Gauss-Jacobi nodes so that ``s**-0.5`` is integrated exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .errors import AccuracyError

GL_ORDER = 16
GRADING_RATIO = 0.5
GRADING_LEVELS = 52


@lru_cache(maxsize=None)
def gauss_legendre(n: int = GL_ORDER):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@lru_cache(maxsize=None)
def gauss_jacobi_sqrt(n: int = GL_ORDER):
    """Nodes/weights on [-1, 1] for the weight ``(1 + x)**-0.5``."""
    x, w = roots_jacobi(n, 0.0, -0.5)
    return x, w


def gaussian_cutoff(tol: float) -> float:
    """``W`` with ``exp(-W**2) = tol``."""
    return math.sqrt(math.log(1.0 / tol))


def composite_nodes(breaks, order: int = GL_ORDER):
    """Flattened Gauss-Legendre nodes and weights over consecutive panels."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = gauss_legendre(order)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (b - a)
    return (a + half * (x + 1.0)).ravel(), (half * w).ravel()


def integrate_adaptive(f, lo: float, hi: float, tol: float = 1e-12,
                       start: int = 4, max_panels: int = 4096):
    """Integrate a vectorised ``f`` over ``[lo, hi]`` by panel doubling.

    ``f`` maps a 1-D node array of shape ``(n,)`` to ``(n, ...)``; the result
    has the trailing shape. Converged when successive estimates agree to
    ``tol * (1 + int |f|)`` everywhere.
    """
    if hi <= lo:
        return np.asarray(f(np.array([lo])))[0] * 0.0
    panels = start
    prev = None
    err = math.inf
    while panels <= max_panels:
        nodes, weights = composite_nodes(np.linspace(lo, hi, panels + 1))
        vals = np.asarray(f(nodes))
        est = np.tensordot(weights, vals, axes=(0, 0))
        if prev is not None:
            mag = np.tensordot(weights, np.abs(vals), axes=(0, 0))
            err = float(np.max(np.abs(est - prev) / (1.0 + mag)))
            if err <= tol:
                return est
        prev = est
        panels *= 2
    raise AccuracyError(f"Gauss panel doubling stalled on [{lo}, {hi}]", err)


@dataclass(frozen=True)
class MemoryMesh:
    """Quadrature for ``int_0^t g(tau) K(t - tau) dtau``.

    ``tau``/``s`` hold the Gauss-Legendre nodes of every panel but the one
    ending at ``tau = t``; ``tau_end``/``s_end`` hold that last panel's nodes.
    ``w`` are the plain Legendre weights for all nodes including the last
    panel (``w_end``), and ``wj_end`` are Gauss-Jacobi weights that already
    absorb the factor ``s**-0.5`` on the last panel.
    """

    t: float
    tau: np.ndarray
    s: np.ndarray
    w: np.ndarray
    tau_end: np.ndarray
    s_end: np.ndarray
    w_end: np.ndarray
    wj_end: np.ndarray
    tau_jac: np.ndarray
    s_jac: np.ndarray

    @classmethod
    def build(cls, t: float, uniform: int = 8, levels: int = GRADING_LEVELS,
              ratio: float = GRADING_RATIO, order: int = GL_ORDER):
        # fractions of t: near tau=0 measured from 0, near tau=t measured from t
        grade = ratio ** np.arange(1, levels + 1)
        core = np.linspace(0.0, 1.0, 2 * uniform + 1)
        head = np.unique(np.concatenate([[0.0], grade[grade < 0.5], core[core <= 0.5]]))
        tail = np.unique(np.concatenate([[0.0], grade[grade < 0.5], core[core <= 0.5]]))
        x, wl = gauss_legendre(order)

        def panels(edges):
            a, b = edges[:-1, None], edges[1:, None]
            half = 0.5 * (b - a)
            return (a + half * (x + 1.0)), half * wl

        # head panels: fraction f of t from tau=0
        fh, wh = panels(head)
        # tail panels: fraction d of t measured back from tau=t
        fd, wd = panels(tail)
        tau = np.concatenate([(t * fh).ravel(), (t * (1.0 - fd[1:])).ravel()])
        s = np.concatenate([(t * (1.0 - fh)).ravel(), (t * fd[1:]).ravel()])
        w = np.concatenate([(t * wh).ravel(), (t * wd[1:]).ravel()])
        # last panel [t - t*d1, t] with d1 = tail[1]
        d1 = tail[1]
        s_end = t * fd[0]
        xj, wj = gauss_jacobi_sqrt(order)
        s_jac = 0.5 * t * d1 * (xj + 1.0)
        wj_end = math.sqrt(0.5 * t * d1) * wj
        return cls(
            t=t, tau=tau, s=s, w=w,
            tau_end=t - s_end, s_end=s_end, w_end=t * wd[0],
            wj_end=wj_end, tau_jac=t - s_jac, s_jac=s_jac,
        )

    def integrate(self, g, kernel):
        """``int_0^t g(tau) kernel(s) dtau`` for a bounded kernel."""
        tau = np.concatenate([self.tau, self.tau_end])
        s = np.concatenate([self.s, self.s_end])
        w = np.concatenate([self.w, self.w_end])
        gv = np.asarray(g(tau))
        kv = np.asarray(kernel(s))
        if kv.ndim > 1:
            return np.tensordot(w * gv, kv, axes=(0, 0))
        return float(np.sum(w * gv * kv))

    def integrate_inv_sqrt(self, g) -> float:
        """``int_0^t g(tau) (t - tau)**-0.5 dtau`` with the singular panel exact."""
        body = np.sum(self.w * np.asarray(g(self.tau)) / np.sqrt(self.s))
        end = np.sum(self.wj_end * np.asarray(g(self.tau_jac)))
        return float(body + end)


def memory_integral(t: float, g, kernel=None, tol: float = 1e-12,
                    start: int = 4, max_uniform: int = 1024):
    """Memory integral with uniform-panel doubling until converged.

    ``kernel=None`` selects the weakly singular ``(t - tau)**-0.5`` weight.
    """
    uniform = start
    prev = None
    err = math.inf
    while uniform <= max_uniform:
        mesh = MemoryMesh.build(t, uniform=uniform)
        if kernel is None:
            est = mesh.integrate_inv_sqrt(g)
        else:
            est = mesh.integrate(g, kernel)
        if prev is not None:
            scale = 1.0 + np.abs(est)
            err = float(np.max(np.abs(est - prev) / scale))
            if err <= tol:
                return est
        prev = est
        uniform *= 2
    raise AccuracyError(f"memory integral at t={t} did not converge", err)
