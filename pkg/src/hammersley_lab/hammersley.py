"""Hammersley's process on a finite label window.

Two exact constructions of the same finite model are provided:

* :func:`evolve_event_driven` replays the space-time points in time order,
  each point pulling the leftmost particle at or to its right onto itself.
* :func:`evolve_variational` evaluates ``z(k,t) = min_i {z(i,0) + gamma}``
  over increasing chains from each particle's starting corner.

Semi-infinite convention: label ``i_min`` is the leftmost particle and is
pinned, as if infinitely many particles were stacked on it. Under this
convention both constructions agree exactly. The variational minimum is
taken over the chain endpoints themselves (absolute abscissae) rather than
``z(i,0) + width``, so no floating rounding separates the two paths.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .poisson_plane import PointSet, Rectangle


class WindowExhausted(RuntimeError):
    """The variational minimizer stayed on a truncated window edge."""


@dataclass
class ParticleConfig:
    """Ordered particle positions ``z(i)`` for labels ``i_min .. i_max``."""

    i_min: int
    positions: np.ndarray
    time_stamp: float = 0.0

    def __post_init__(self):
        self.positions = np.array(self.positions, dtype=float)
        if self.positions.ndim != 1 or self.positions.size == 0:
            raise ValueError("positions must be a nonempty 1-d sequence")
        if np.any(np.diff(self.positions) < 0):
            raise ValueError("positions must be nondecreasing in the label")
        if self.time_stamp < 0:
            raise ValueError("time_stamp must be nonnegative")

    @property
    def i_max(self) -> int:
        return self.i_min + self.positions.size - 1

    @property
    def labels(self) -> np.ndarray:
        return np.arange(self.i_min, self.i_max + 1)

    def __len__(self):
        return self.positions.size

    def __getitem__(self, label: int) -> float:
        return tagged_position(self, label)

    def copy(self) -> ParticleConfig:
        return ParticleConfig(self.i_min, self.positions.copy(), self.time_stamp)


def window_exponent(nu: float, beta: float, delta_w: float) -> float:
    """Smallest admissible index-window exponent, with slack on the strict side."""
    if delta_w <= 0:
        raise ValueError("delta_w must be positive")
    return max(nu - beta, 2.0 * nu / 3.0 + delta_w)


@dataclass(frozen=True)
class WindowPolicy:
    """Candidate-index window of half-width ``ceil(b * n**xi)`` around a center."""

    nu: float
    beta: float
    delta_w: float = 0.05
    b: float = 4.0
    max_widenings: int = 4

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError("window multiplier b must be positive")
        if self.max_widenings < 0:
            raise ValueError("max_widenings must be nonnegative")
        if self.delta_w <= 0:
            raise ValueError("delta_w must be positive")

    @property
    def xi(self) -> float:
        return window_exponent(self.nu, self.beta, self.delta_w)

    def half_width(self, n: int) -> int:
        return max(1, math.ceil(self.b * n ** self.xi))

    def max_half_width(self, n: int) -> int:
        return self.half_width(n) * 2 ** self.max_widenings


def tagged_position(config: ParticleConfig, label: int) -> float:
    if not config.i_min <= label <= config.i_max:
        raise IndexError(f"label {label} outside [{config.i_min}, {config.i_max}]")
    return float(config.positions[label - config.i_min])


def _check_horizon(z0: ParticleConfig, t: float):
    if t < z0.time_stamp:
        raise ValueError(f"target time {t} precedes the configuration time {z0.time_stamp}")


def evolve_event_driven(z0: ParticleConfig, store, t: float) -> ParticleConfig:
    """Configuration at time ``t`` from the points in ``(z0 left, z0 right] x (t0, t]``."""
    _check_horizon(z0, t)
    out = z0.copy()
    out.time_stamp = float(t)
    lo, hi = z0.positions[0], z0.positions[-1]
    if t == z0.time_stamp or not lo < hi:
        return out
    xs, ts = store.query(Rectangle(lo, hi, z0.time_stamp, t))
    order = np.lexsort((xs, ts))
    _kernels.pull_leftmost(out.positions, np.ascontiguousarray(xs[order]))
    return out


@dataclass
class VariationalResult:
    """Per-label positions plus the minimizing start label and final window."""

    positions: dict = field(default_factory=dict)
    argmin: dict = field(default_factory=dict)
    windows: dict = field(default_factory=dict)
    widenings: dict = field(default_factory=dict)

    def __getitem__(self, label):
        return self.positions[label]


class _ReachCache:
    """Chain endpoints from each starting corner, from a single shared sweep."""

    def __init__(self, z0: ParticleConfig, xs, ts, t0, t1, x_cap, k_max):
        self.z0 = z0
        self.xs, self.ts = xs, ts
        self.t0, self.t1 = t0, t1
        self.x_cap = x_cap
        self.k_max = k_max
        self._reach: dict[int, np.ndarray] = {}

    def get(self, i: int, m_needed: int) -> np.ndarray:
        r = self._reach.get(i)
        if r is None or r.size <= m_needed:
            a = self.z0.positions[i - self.z0.i_min]
            start = int(np.searchsorted(self.xs, a, side="right"))
            # sweep once for every label this corner can serve; x_cap bounds the work
            m = max(m_needed, self.k_max - i)
            r = _kernels.reach_sweep(self.xs, self.ts, start, self.x_cap,
                                     self.t0, self.t1, m)
            r[0] = a
            self._reach[i] = r
        return r


def evolve_variational(z0: ParticleConfig, store, t: float, labels: Iterable[int],
                       policy: WindowPolicy | None = None, n: int = 1,
                       shift: int = 0, engine: str = "pull") -> VariationalResult:
    """Positions at time ``t`` for ``labels`` via the minimum over start labels.

    Without a ``policy`` every start label ``i_min <= i <= k`` is scanned, which
    is exact for the finite model. With a policy the scan is restricted to
    ``|i - (k - shift)| <= W`` (intersected with ``i <= k``), ``W`` from
    ``policy.half_width(n)``. A minimizer on a truncated edge doubles ``W``, up to
    ``policy.max_widenings`` times, after which :class:`WindowExhausted` is
    raised. Edges that coincide with ``i_min`` or ``k`` are natural bounds and
    never trigger widening.

    ``engine`` selects how a windowed minimum is found. ``"sweep"`` runs one
    chain sweep per start label and records the minimizer. ``"pull"`` (the
    default) replays the points on particles ``lo..k`` with ``lo`` pinned,
    which gives the minimum over ``[lo, k]`` in one pass, and tests the left
    edge with a single sweep. Its windows are ``(lo, k)`` and it leaves
    ``argmin`` as ``None``.
    """
    if engine not in ("pull", "sweep"):
        raise ValueError(f"unknown engine {engine!r}")
    _check_horizon(z0, t)
    labels = sorted(set(int(k) for k in labels))
    for k in labels:
        if not z0.i_min <= k <= z0.i_max:
            raise IndexError(f"label {k} outside [{z0.i_min}, {z0.i_max}]")
    res = VariationalResult()
    if not labels:
        return res
    t0 = z0.time_stamp
    if t == t0:
        for k in labels:
            res.positions[k] = tagged_position(z0, k)
            res.argmin[k] = k
            res.windows[k] = (k, k)
            res.widenings[k] = 0
        return res

    x_cap = z0.positions[labels[-1] - z0.i_min]

    def build(lo_label):
        x_lo = z0.positions[lo_label - z0.i_min]
        if x_lo < x_cap:
            xs, ts = store.query(Rectangle(x_lo, x_cap, t0, t))
        else:
            xs, ts = np.empty(0), np.empty(0)
        c = _ReachCache(z0, xs, ts, t0, t, x_cap, labels[-1])
        c.lo_label = lo_label
        return c

    if policy is None:
        cache = build(z0.i_min)
    else:
        # cover the unwidened windows first; grow only when a widening needs it
        cache = build(max(z0.i_min, labels[0] - shift - policy.half_width(n)))

    for k in labels:
        if policy is None:
            lo, hi = z0.i_min, k
            widenings = 0
            value, arg = _scan(cache, k, lo, hi)
        else:
            w = policy.half_width(n)
            widenings = 0
            while True:
                center = k - shift
                lo = max(z0.i_min, center - w)
                hi = min(k, center + w)
                if lo < cache.lo_label:
                    cache = build(max(z0.i_min, min(lo, labels[0] - shift - w)))
                if engine == "pull":
                    hi = k
                    value, arg = _pull(cache, k, lo), None
                    on_edge = lo > z0.i_min and _corner_reach(cache, lo, k, value) <= value
                else:
                    value, arg = _scan_bounded(cache, k, lo, hi, center)
                    on_edge = (arg == lo and lo > z0.i_min) or (arg == hi and hi < k)
                if hi < k:
                    # the i = k term caps every label; beating the window means it is misplaced
                    own = tagged_position(z0, k)
                    if own < value:
                        value, arg, on_edge = own, k, True
                if not on_edge:
                    break
                if widenings >= policy.max_widenings:
                    raise WindowExhausted(
                        f"label {k}: minimizer {arg} on window edge [{lo}, {hi}] "
                        f"after {widenings} widenings")
                widenings += 1
                w *= 2
        res.positions[k] = value
        res.argmin[k] = arg
        res.windows[k] = (lo, hi)
        res.widenings[k] = widenings
    return res


def _scan(cache: _ReachCache, k: int, lo: int, hi: int) -> tuple[float, int]:
    best = math.inf
    arg = lo
    for i in range(lo, hi + 1):
        v = cache.get(i, k - i)[k - i]
        # strict < keeps the smallest minimizing index
        if v < best:
            best = v
            arg = i
    return float(best), arg


def _pull(cache: _ReachCache, k: int, lo: int) -> float:
    z0 = cache.z0
    sub = z0.positions[lo - z0.i_min: k - z0.i_min + 1].copy()
    a = np.searchsorted(cache.xs, sub[0], side="right")
    b = np.searchsorted(cache.xs, sub[-1], side="right")
    xs, ts = cache.xs[a:b], cache.ts[a:b]
    order = np.argsort(ts, kind="stable")
    _kernels.pull_leftmost(sub, np.ascontiguousarray(xs[order]))
    return float(sub[-1])


def _corner_reach(cache: _ReachCache, i: int, k: int, x_stop: float) -> float:
    if i == k:
        return float(cache.z0.positions[i - cache.z0.i_min])
    a = cache.z0.positions[i - cache.z0.i_min]
    start = int(np.searchsorted(cache.xs, a, side="right"))
    return _kernels.reach_one(cache.xs, cache.ts, start, x_stop, cache.t0, cache.t1, k - i)


def _scan_bounded(cache: _ReachCache, k: int, lo: int, hi: int, center: int) -> tuple[float, int]:
    """Same minimum and smallest minimizer as :func:`_scan`, with pruning.

    Corners are visited from ``center`` outward and each sweep is abandoned
    once it passes the best endpoint so far (or ``z0(k)``, which caps every
    label), so most sweeps stop early.
    """
    z0 = cache.z0
    pos = z0.positions
    bound = float(pos[k - z0.i_min])
    best, arg = math.inf, lo
    c = min(max(center, lo), hi)
    order = [c]
    for d in range(1, max(c - lo, hi - c) + 1):
        if c - d >= lo:
            order.append(c - d)
        if c + d <= hi:
            order.append(c + d)
    for i in order:
        a = pos[i - z0.i_min]
        if i == k:
            v = float(a)
        elif a >= bound:
            # every chain endpoint lies strictly right of its corner
            continue
        else:
            start = int(np.searchsorted(cache.xs, a, side="right"))
            v = _kernels.reach_one(cache.xs, cache.ts, start, bound, cache.t0, cache.t1, k - i)
        if v < best or (v == best and i < arg):
            best, arg = v, i
        bound = min(bound, v)
    return float(best), arg


def evolve_variational_config(z0: ParticleConfig, store, t: float) -> ParticleConfig:
    """Whole-window variational evolution, exact for the finite model."""
    res = evolve_variational(z0, store, t, z0.labels)
    return ParticleConfig(z0.i_min, [res.positions[k] for k in z0.labels], t)


def scaling_covariance_check(z0: ParticleConfig, points: PointSet, t: float,
                             lam: float = 2.0) -> bool:
    """Evolve the instance and its ``(x,t) -> (lam x, t/lam)`` image; compare.

    Equality is exact. With ``lam`` a power of two every scaled coordinate is
    exact in floating point, which is where the check is meaningful bit for bit.
    """
    direct = evolve_event_driven(z0, points, t)
    scaled_z0 = ParticleConfig(z0.i_min, z0.positions * lam, z0.time_stamp / lam)
    scaled = evolve_event_driven(scaled_z0, points.scaled(lam), t / lam)
    return bool(np.array_equal(scaled.positions / lam, direct.positions))


def write_trajectory_csv(path, snapshots: Sequence[ParticleConfig]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "time", "position"])
        for cfg in snapshots:
            for k, z in zip(cfg.labels, cfg.positions):
                w.writerow([int(k), repr(float(cfg.time_stamp)), repr(float(z))])
