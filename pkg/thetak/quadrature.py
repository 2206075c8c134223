"""
Composite Gauss-Legendre quadrature.

Integrands are vectorised callables taking numpy arrays and start from a
panel count chosen by the caller. Intervals refine adaptively: a panel is
split while it disagrees with its two halves by more than its share of the
absolute tolerance. Boxes and sphere averages refine globally, doubling every
panel until two successive estimates agree. Either way a rule that would
exceed the node cap raises QuadratureError.
"""

import logging
import math
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from .config import settings
from .errors import QuadratureError

logger = logging.getLogger("thetak.quadrature")

Integrand = Callable[..., np.ndarray]


@lru_cache(maxsize=8)
def gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = leggauss(n)
    return nodes, weights


def _panel_nodes(a: float, b: float, panels: int, rule: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(rule)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _converge(estimate: Callable[[int], complex], panels: int, label: str,
              tol: Optional[float] = None) -> complex:
    tol = settings.QUADRATURE_TOL if tol is None else tol
    rule = settings.QUADRATURE_RULE
    panels = max(1, int(panels))
    previous = estimate(panels)
    while True:
        panels *= 2
        if panels * rule > settings.QUADRATURE_NODE_CAP:
            raise QuadratureError(
                f"{label}: no convergence to {tol:g} within {settings.QUADRATURE_NODE_CAP} nodes"
            )
        current = estimate(panels)
        if abs(current - previous) <= tol:
            logger.debug("%s converged with %d panels", label, panels)
            return current
        previous = current


def integrate_interval(f: Integrand, a: float, b: float, panels: int = 1,
                       tol: Optional[float] = None) -> complex:
    """
    int_a^b f(x) dx for finite a <= b.

    Every panel is compared with its two halves; panels whose halves disagree
    by more than their share of tol are split again, the rest are kept.
    """
    if b <= a:
        return 0.0
    tol = settings.QUADRATURE_TOL if tol is None else tol
    rule = settings.QUADRATURE_RULE
    x, w = gauss_legendre(rule)
    edges = np.linspace(a, b, max(1, int(panels)) + 1)
    lo, hi = edges[:-1], edges[1:]
    kept: List[complex] = []
    is_complex = False
    while len(lo):
        if 2 * rule * (len(kept) + len(lo)) > settings.QUADRATURE_NODE_CAP:
            raise QuadratureError(
                f"interval [{a:g}, {b:g}]: no convergence to {tol:g} within {settings.QUADRATURE_NODE_CAP} nodes"
            )
        mid = 0.5 * (lo + hi)
        starts = np.concatenate([lo, lo, mid])
        ends = np.concatenate([hi, mid, hi])
        half = 0.5 * (ends - starts)
        nodes = 0.5 * (starts + ends)[:, None] + half[:, None] * x[None, :]
        values = np.broadcast_to(f(nodes.ravel()), (nodes.size,)).reshape(nodes.shape)
        is_complex = is_complex or np.iscomplexobj(values)
        sums = np.sum(half[:, None] * w[None, :] * values, axis=1)
        n = len(lo)
        whole, halves = sums[:n], sums[n:2 * n] + sums[2 * n:]
        done = np.abs(whole - halves) <= tol * (hi - lo) / (b - a)
        kept.extend(halves[done].tolist())
        lo, hi = np.concatenate([lo[~done], mid[~done]]), np.concatenate([mid[~done], hi[~done]])
    logger.debug("interval [%g, %g] converged with %d panels", a, b, 2 * len(kept))
    if is_complex:
        return complex(math.fsum(complex(v).real for v in kept), math.fsum(complex(v).imag for v in kept))
    return math.fsum(kept)


def integrate_box(f: Integrand, lower: Sequence[float], upper: Sequence[float],
                  panels: Sequence[int] = (1, 1), tol: Optional[float] = None) -> complex:
    """Tensor-product rule on a 2-D box; f takes two broadcastable arrays."""
    (a0, a1), (b0, b1) = lower, upper
    if b0 <= a0 or b1 <= a1:
        return 0.0
    rule = settings.QUADRATURE_RULE
    ratio = max(1, int(panels[1])) / max(1, int(panels[0]))

    def estimate(n: int) -> complex:
        x0, w0 = _panel_nodes(a0, b0, n, rule)
        x1, w1 = _panel_nodes(a1, b1, max(1, int(round(n * ratio))), rule)
        values = f(x0[:, None], x1[None, :])
        return np.sum(w0[:, None] * w1[None, :] * values)

    return _converge(estimate, panels[0], f"box {list(lower)}..{list(upper)}", tol)


def integrate_simplex(f: Integrand, panels: int = 1, tol: Optional[float] = None) -> complex:
    """
    Integral over the standard 2-simplex {s >= 0, s0 + s1 <= 1}.

    Duffy map s0 = u, s1 = (1 - u) v with Jacobian (1 - u).
    """
    def g(u, v):
        return (1.0 - u) * f(u, (1.0 - u) * v)

    return integrate_box(g, (0.0, 0.0), (1.0, 1.0), (panels, panels), tol)


def sphere_average(f: Integrand, radius: float, axis_only: bool = False,
                   panels: int = 1, tol: Optional[float] = None) -> complex:
    """
    Mean of f over the sphere of the given radius in R^3.

    f takes three arrays (x, y, z); z is the distinguished axis. With
    axis_only the integrand is assumed to depend on z alone and the azimuth
    is skipped (Archimedes: z is uniform on [-radius, radius]).
    """
    rule = settings.QUADRATURE_RULE
    tol = settings.QUADRATURE_TOL if tol is None else tol

    if axis_only:
        def g(u):
            zeros = np.zeros_like(u)
            return 0.5 * f(zeros, zeros, radius * u)

        return integrate_interval(g, -1.0, 1.0, panels, tol)

    angles = settings.SPHERE_ANGLE_NODES

    def estimate(n: int) -> complex:
        u, w = _panel_nodes(-1.0, 1.0, n, rule)
        m = angles * n
        theta = 2.0 * np.pi * np.arange(m) / m
        s = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
        x = radius * s[:, None] * np.cos(theta)[None, :]
        y = radius * s[:, None] * np.sin(theta)[None, :]
        z = radius * np.broadcast_to(u[:, None], x.shape)
        values = f(x, y, z)
        return 0.5 * np.sum(w[:, None] * values) / m

    return _converge(estimate, panels, f"sphere r={radius:g}", tol)
