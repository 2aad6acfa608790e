"""Longest increasing chains of planar points and their deviation estimates.

``L`` counts the longest chain strictly increasing in both coordinates inside
a rectangle; ``gamma`` inverts it in the horizontal direction. The tail
bounds below are plain evaluators of closed-form expressions, with the
unknown constants of the upper bound passed in as configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import _kernels
from .poisson_plane import PlanarPoint, Rectangle

INFINITE = math.inf

BRUTEFORCE_MAX = 20


class DomainError(ValueError):
    """Arguments fall outside the range where a bound is stated."""


def _as_arrays(points) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(points, tuple) and len(points) == 2 and isinstance(points[0], np.ndarray):
        xs, ts = points
    elif len(points) == 0:
        return np.empty(0), np.empty(0)
    else:
        arr = np.asarray(points, dtype=float)
        xs, ts = arr[:, 0], arr[:, 1]
    xs = np.ascontiguousarray(xs, dtype=float)
    ts = np.ascontiguousarray(ts, dtype=float)
    order = np.lexsort((ts, xs))
    return xs[order], ts[order]


def lis_length(points) -> int:
    """Longest strictly increasing chain, by patience sorting.

    Accepts a sequence of ``(x, t)`` pairs or an ``(xs, ts)`` tuple of arrays.
    """
    xs, ts = _as_arrays(points)
    if xs.size == 0:
        return 0
    return int(_kernels.lis_sorted(xs, ts))


def lis_length_bruteforce(points: Sequence[PlanarPoint]) -> int:
    """Exhaustive maximum over all increasing chains (at most 20 points)."""
    pts = sorted(tuple(map(float, p)) for p in points)
    if len(pts) > BRUTEFORCE_MAX:
        raise ValueError(f"brute force is capped at {BRUTEFORCE_MAX} points, got {len(pts)}")
    best = 0

    def extend(last, length, rest):
        nonlocal best
        best = max(best, length)
        for j, p in enumerate(rest):
            if last is None or (p[0] > last[0] and p[1] > last[1]):
                extend(p, length + 1, rest[j + 1:])

    extend(None, 0, pts)
    return best


def L(store, a: float, s: float, b: float, t: float) -> int:
    """``L((a,s),(b,t))`` on a point source."""
    return lis_length(store.query(Rectangle(a, b, s, t)))


def gamma(store, corner, m: int, tau: float, width_cap: float) -> float:
    """Minimal width ``h`` such that ``(a, a+h] x (s, s+tau]`` holds an increasing chain of ``m``.

    Searches the strip ``(a, a + width_cap]``; returns :data:`INFINITE` when no
    chain of length ``m`` fits inside the cap.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if width_cap <= 0:
        raise ValueError("width_cap must be positive")
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return 0.0
    a, s = corner
    reach = gamma_reach(store, a, s, m, tau, a + width_cap)[m]
    if not math.isfinite(reach):
        return INFINITE
    # smallest double h with a + h >= reach, so rectangles built from h behave exactly
    h = reach - a
    while a + h < reach:
        h = math.nextafter(h, math.inf)
    while h > 0 and a + math.nextafter(h, -math.inf) >= reach:
        h = math.nextafter(h, -math.inf)
    return h


def gamma_reach(store, a: float, s: float, m_max: int, tau: float, x_cap: float) -> np.ndarray:
    """Absolute abscissae ``a + gamma((a,s), m, tau)`` for every ``m <= m_max``.

    One x-ordered sweep serves all ``m``. Entry 0 is ``a``; unreachable
    lengths are ``inf``. The sweep runs left to right, so reaches inside a
    narrower strip are already final: the strip starts near the expected
    width of ``m_max`` and doubles until ``m_max`` is reached or ``x_cap`` is hit.
    """
    if x_cap <= a:
        out = np.full(m_max + 1, np.inf)
    else:
        width = max(1.0, 2.0 * m_max * m_max / (4.0 * tau))
        while True:
            hi = min(x_cap, a + width)
            xs, ts = store.query(Rectangle(a, hi, s, s + tau))
            out = _kernels.reach_sweep(xs, ts, 0, hi, s, s + tau, m_max)
            if hi >= x_cap or math.isfinite(out[m_max]):
                break
            width *= 2.0
    out[0] = a
    return out


def lln_L(b: float, t: float) -> float:
    if b <= 0 or t <= 0:
        raise ValueError("b and t must be positive")
    return 2.0 * math.sqrt(b * t)


def lln_gamma(a: float, t: float) -> float:
    if a <= 0 or t <= 0:
        raise ValueError("a and t must be positive")
    return a * a / (4.0 * t)


@dataclass(frozen=True)
class RateEval:
    x: float
    value: float


def rate_I(x: float) -> RateEval:
    """Upper-deviation rate of ``L(s,s)/s``; zero at and below 2."""
    if x <= 2.0:
        return RateEval(x, 0.0)
    return RateEval(x, 2.0 * x * math.acosh(x / 2.0) - 2.0 * math.sqrt(x * x - 4.0))


def fit_rate_constant(u_max: float = 0.5, grid: int = 2001) -> float:
    """Largest ``C`` with ``I(2+u) >= C u^{3/2}`` on ``(0, u_max]``.

    The ratio tends to 4/3 as ``u -> 0``; this reports the grid minimum of
    what the evaluator actually returns.
    """
    us = np.linspace(u_max / grid, u_max, grid)
    ratios = np.array([rate_I(2.0 + u).value for u in us]) / us ** 1.5
    return float(ratios.min())


def lower_tail_bound(a: float, s: float, h: float) -> float:
    """Bound on ``P{gamma([a], s) <= a^2/4s - h}``, valid for ``a <= hs < a^2/4``."""
    if a <= 0 or s <= 0 or h <= 0:
        raise DomainError("a, s, h must be positive")
    hs = h * s
    if not (a <= hs < a * a / 4.0):
        raise DomainError(f"need a <= h*s < a^2/4, got a={a}, h*s={hs}")
    return math.exp(-0.5 * math.sqrt(a * a - 4.0 * hs) * rate_I(2.0 + hs / (a * a)).value)


@dataclass(frozen=True)
class UpperTailConstants:
    """Constants of the upper-tail bound. The defaults are placeholders."""

    B0: float = 100.0
    B1: float = 1.0
    d0: float = 0.1
    C0: float = 1.0
    C1: float = 1e-2


def upper_tail_bound(a: float, s: float, h: float,
                     constants: UpperTailConstants = UpperTailConstants()) -> float:
    """``C0 exp(-C1 s^3 h^3 / a^4)`` on ``a >= B0``, ``B1 a^{4/3} <= hs <= d0 a^2``."""
    c = constants
    hs = h * s
    if a < c.B0:
        raise DomainError(f"need a >= B0={c.B0}, got {a}")
    if not (c.B1 * a ** (4.0 / 3.0) <= hs <= c.d0 * a * a):
        raise DomainError(f"need B1 a^(4/3) <= h*s <= d0 a^2, got h*s={hs}")
    return c.C0 * math.exp(-c.C1 * hs ** 3 / a ** 4)


def kappa(x: float) -> float:
    """Cramer rate function of the Exp(1) law."""
    if x <= 0:
        raise ValueError("kappa is defined for positive x")
    return x - 1.0 - math.log(x)


def kappa_quadratic_constant(u_max: float = 0.5) -> float:
    """``min kappa(1+u)/u^2`` over ``0 < |u| <= u_max``, found numerically."""
    def ratio(u):
        return kappa(1.0 + u) / (u * u)

    best = math.inf
    for lo, hi in ((-u_max, -1e-6), (1e-6, u_max)):
        res = minimize_scalar(ratio, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        best = min(best, float(res.fun), ratio(lo), ratio(hi))
    return best
