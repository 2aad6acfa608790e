r"""Hopf-Lax solutions of ``V_t + (V_x)^2 = 0`` and the matching Burgers fields.

Initial data are piecewise polynomials of degree at most two. That covers
the antiderivatives ``V0`` of piecewise-linear (possibly discontinuous)
perturbations ``v0``, which is the class the particle code samples from. On
each piece the Hopf-Lax objective

.. math:: V_0(y) + \frac{(x-y)^2}{4t}

is a quadratic in ``y``, so the infimum is found exactly by comparing the
piece endpoints with the interior stationary points.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

# relative slack when deciding that two candidate values tie
_TIE_RTOL = 1e-13


class PiecewisePoly:
    """Piecewise polynomial of degree <= 2 on the real line.

    ``breakpoints`` ``b_0 < ... < b_{K-1}`` split the line into ``K+1`` pieces;
    piece ``j`` carries ``coeffs[j] = (c0, c1, c2)`` meaning ``c0 + c1 x + c2 x^2``
    in the global variable. Piece 0 is ``(-inf, b_0)``, piece ``K`` is
    ``(b_{K-1}, inf)``. At a breakpoint the right piece is used, unless the
    function is asked for its left limit.
    """

    def __init__(self, breakpoints: Sequence[float], coeffs):
        bp = [float(b) for b in breakpoints]
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        cf = np.asarray(coeffs, dtype=float)
        if cf.ndim != 2 or cf.shape[1] != 3 or cf.shape[0] != len(bp) + 1:
            raise ValueError("need len(breakpoints)+1 rows of (c0, c1, c2)")
        self.breakpoints = bp
        self.coeffs = cf

    def __repr__(self):
        return f"PiecewisePoly(breakpoints={self.breakpoints}, coeffs={self.coeffs.tolist()})"

    def __eq__(self, other):
        return (isinstance(other, PiecewisePoly) and self.breakpoints == other.breakpoints
                and np.array_equal(self.coeffs, other.coeffs))

    @property
    def n_pieces(self) -> int:
        return len(self.coeffs)

    def piece(self, j: int) -> tuple[float, float]:
        lo = -math.inf if j == 0 else self.breakpoints[j - 1]
        hi = math.inf if j == len(self.breakpoints) else self.breakpoints[j]
        return lo, hi

    def _index(self, x: float) -> int:
        return bisect.bisect_right(self.breakpoints, x)

    def eval_piece(self, j: int, x):
        c0, c1, c2 = self.coeffs[j]
        return c0 + x * (c1 + c2 * x)

    def __call__(self, x):
        if np.ndim(x) == 0:
            return float(self.eval_piece(self._index(float(x)), float(x)))
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right")
        c = self.coeffs[idx]
        return c[..., 0] + x * (c[..., 1] + c[..., 2] * x)

    def left_limit(self, x: float) -> float:
        return float(self.eval_piece(bisect.bisect_left(self.breakpoints, x), x))

    @property
    def degree(self) -> int:
        if np.any(self.coeffs[:, 2] != 0):
            return 2
        if np.any(self.coeffs[:, 1] != 0):
            return 1
        return 0

    def is_continuous(self, atol: float = 1e-12) -> bool:
        for j, b in enumerate(self.breakpoints):
            if abs(self.eval_piece(j, b) - self.eval_piece(j + 1, b)) > atol * (1 + abs(b)):
                return False
        return True

    def derivative(self) -> PiecewisePoly:
        c = self.coeffs
        d = np.column_stack([c[:, 1], 2.0 * c[:, 2], np.zeros(len(c))])
        return PiecewisePoly(self.breakpoints, d)

    def antiderivative(self, anchor: float = 0.0) -> PiecewisePoly:
        """Continuous antiderivative vanishing at ``anchor``; degree must be <= 1."""
        if self.degree > 1:
            raise ValueError("antiderivative needs a piecewise-linear function")
        c = self.coeffs
        out = np.column_stack([np.zeros(len(c)), c[:, 0], 0.5 * c[:, 1]])
        # fix constants so pieces join continuously, starting from the anchor's piece
        j0 = self._index(anchor)
        out[j0, 0] = -(out[j0, 1] * anchor + out[j0, 2] * anchor ** 2)
        tmp = PiecewisePoly(self.breakpoints, out)
        for j in range(j0 + 1, len(c)):
            b = self.breakpoints[j - 1]
            out[j, 0] += tmp.eval_piece(j - 1, b) - tmp.eval_piece(j, b)
        for j in range(j0 - 1, -1, -1):
            b = self.breakpoints[j]
            out[j, 0] += tmp.eval_piece(j + 1, b) - tmp.eval_piece(j, b)
        return PiecewisePoly(self.breakpoints, out)

    def integral(self, a: float, b: float) -> float:
        """Exact integral over ``[a, b]`` (degree <= 1 pieces)."""
        if b < a:
            return -self.integral(b, a)
        F = self.antiderivative(0.0)
        return F(b) - F(a)

    def sup_abs(self) -> float:
        """Supremum of ``|f|``; infinite when a tail is not constant."""
        c = self.coeffs
        if np.any(c[0, 1:] != 0) or np.any(c[-1, 1:] != 0):
            return math.inf
        best = max(abs(c[0, 0]), abs(c[-1, 0]))
        for j in range(1, len(c) - 1):
            lo, hi = self.piece(j)
            cand = [lo, hi]
            if c[j, 2] != 0:
                v = -c[j, 1] / (2 * c[j, 2])
                if lo < v < hi:
                    cand.append(v)
            best = max(best, max(abs(self.eval_piece(j, y)) for y in cand))
        return float(best)

    def lipschitz(self) -> float:
        """``sup |f'|``; infinite when a tail has a nonzero quadratic term."""
        return self.derivative().sup_abs()

    def tail_slopes(self) -> tuple[float, float]:
        """Slopes of the two unbounded pieces (their derivative at infinity)."""
        c = self.coeffs
        if c[0, 2] != 0 or c[-1, 2] != 0:
            raise ValueError("tails are not linear")
        return float(c[0, 1]), float(c[-1, 1])


# constructors ---------------------------------------------------------------

def linear_interp(xs: Sequence[float], ys: Sequence[float],
                  left_slope: float = 0.0, right_slope: float = 0.0) -> PiecewisePoly:
    """Continuous piecewise-linear function through ``(xs, ys)``."""
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    if len(xs) != len(ys) or not xs:
        raise ValueError("need matching nonempty xs and ys")
    rows = [(ys[0] - left_slope * xs[0], left_slope, 0.0)]
    for x1, x2, y1, y2 in zip(xs, xs[1:], ys, ys[1:]):
        s = (y2 - y1) / (x2 - x1)
        rows.append((y1 - s * x1, s, 0.0))
    rows.append((ys[-1] - right_slope * xs[-1], right_slope, 0.0))
    return PiecewisePoly(xs, rows)


def step(breakpoints: Sequence[float], levels: Sequence[float]) -> PiecewisePoly:
    """Piecewise-constant function with ``len(breakpoints)+1`` levels."""
    return PiecewisePoly(breakpoints, [(float(v), 0.0, 0.0) for v in levels])


def constant(c: float) -> PiecewisePoly:
    return PiecewisePoly([0.0], [(c, 0.0, 0.0), (c, 0.0, 0.0)])


def tent(center: float = 0.0, half_width: float = 1.0, height: float = 1.0) -> PiecewisePoly:
    return linear_interp([center - half_width, center, center + half_width], [0.0, height, 0.0])


def linear(slope: float) -> PiecewisePoly:
    return PiecewisePoly([0.0], [(0.0, slope, 0.0), (0.0, slope, 0.0)])


def abs_value() -> PiecewisePoly:
    return PiecewisePoly([0.0], [(0.0, -1.0, 0.0), (0.0, 1.0, 0.0)])


# Hopf-Lax -------------------------------------------------------------------

@dataclass(frozen=True)
class HopfLaxValue:
    value: float
    minimizer: float


def hopf_lax(V0: PiecewisePoly, x: float, t: float) -> HopfLaxValue:
    """``inf_y {V0(y) + (x-y)^2/(4t)}`` with the smallest minimizer."""
    if t <= 0:
        raise ValueError(f"hopf_lax needs t > 0, got {t}")
    if not V0.is_continuous():
        raise ValueError("initial datum must be continuous")
    k = 1.0 / (4.0 * t)
    cands: list[float] = list(V0.breakpoints)
    for j in range(V0.n_pieces):
        lo, hi = V0.piece(j)
        c0, c1, c2 = V0.coeffs[j]
        a2 = c2 + k
        if a2 <= 0:
            if math.isinf(lo) or math.isinf(hi):
                raise ValueError("objective unbounded below on an unbounded piece")
            continue
        y = (2.0 * k * x - c1) / (2.0 * a2)
        if lo < y < hi:
            cands.append(y)
    best = math.inf
    for y in cands:
        v = V0(y) + k * (x - y) ** 2
        if v < best:
            best = v
    tol = _TIE_RTOL * (1.0 + abs(best))
    y_star = min(y for y in cands if V0(y) + k * (x - y) ** 2 <= best + tol)
    return HopfLaxValue(float(best), float(y_star))


def V(V0: PiecewisePoly, x: float, t: float) -> float:
    if t == 0:
        return V0(x)
    return hopf_lax(V0, x, t).value


def entropy_solution(V0: PiecewisePoly, x: float, t: float) -> float:
    """``v = V_x`` as ``(x - y*)/(2t)``; left-continuous across shocks."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return float(V0.derivative()(x))
    hl = hopf_lax(V0, x, t)
    return (x - hl.minimizer) / (2.0 * t)


def slopes_at_infinity(V0: PiecewisePoly) -> tuple[float, float]:
    return V0.tail_slopes()


def asymptotic_profile_value(v_minus: float, v_plus: float, x: float, t: float) -> float:
    """Hopf-Lax evolution of the two-slope cone ``v_- y (y<0), v_+ y (y>0)``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        if x < 0:
            return v_minus * x
        return v_plus * x if x > 0 else 0.0
    best = x * x / (4.0 * t)
    y = x - 2.0 * v_minus * t
    if y < 0:
        best = min(best, v_minus * x - v_minus * v_minus * t)
    y = x - 2.0 * v_plus * t
    if y > 0:
        best = min(best, v_plus * x - v_plus * v_plus * t)
    return best


def integrate_against(phi: PiecewisePoly, V0: PiecewisePoly, t: float) -> float:
    """``int phi(x) v(x,t) dx`` for compactly supported piecewise-linear ``phi``.

    Integrates by parts, ``-int phi'(x) V(x,t) dx``, and evaluates the
    remaining integral piece by piece with adaptive quadrature on ``V``, which
    is continuous and piecewise smooth.
    """
    c = phi.coeffs
    if np.any(c[0] != 0) or np.any(c[-1] != 0):
        raise ValueError("phi must vanish outside its breakpoints")
    if phi.degree > 1:
        raise ValueError("phi must be piecewise linear")
    if t == 0:
        f = lambda y: phi(y) * float(V0.derivative()(y))
    total = 0.0
    bps = phi.breakpoints
    for j in range(1, len(c) - 1):
        lo, hi = bps[j - 1], bps[j]
        if t == 0:
            val, _ = integrate.quad(f, lo, hi, limit=200, epsabs=1e-13, epsrel=1e-12)
            total += val
            continue
        slope = c[j, 1]
        if slope == 0:
            continue
        val, _ = integrate.quad(lambda y: V(V0, y, t), lo, hi, limit=400,
                                epsabs=1e-13, epsrel=1e-12)
        total -= slope * val
    if t > 0:
        # jumps of phi at breakpoints contribute boundary terms
        for b in bps:
            jump = phi(b) - phi.left_limit(b)
            total -= jump * V(V0, b, t)
    return float(total)


def write_field_csv(path, V0: PiecewisePoly, xs: Sequence[float], ts: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "t", "V", "v"])
        for t in ts:
            for x in map(float, xs):
                w.writerow([repr(x), repr(float(t)), repr(float(V(V0, x, t))),
                            repr(float(entropy_solution(V0, x, t)))])
