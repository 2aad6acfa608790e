"""Stick heights, local-equilibrium sampling and a direct Gillespie simulator.

Sticks and particles are two views of one system: ``eta(i) = z(i) - z(i-1)``.
A :class:`StickConfig` on labels ``a..b`` corresponds to particles on
``a-1..b``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .burgers import PiecewisePoly, constant
from .hammersley import ParticleConfig


class ConfigurationError(ValueError):
    """A profile or configuration violates its positivity constraints."""


@dataclass
class StickConfig:
    i_min: int
    heights: np.ndarray
    time_stamp: float = 0.0

    def __post_init__(self):
        self.heights = np.array(self.heights, dtype=float)
        if self.heights.ndim != 1 or self.heights.size == 0:
            raise ValueError("heights must be a nonempty 1-d sequence")
        if np.any(self.heights < 0):
            raise ValueError("stick heights must be nonnegative")

    @property
    def i_max(self) -> int:
        return self.i_min + self.heights.size - 1

    @property
    def labels(self) -> np.ndarray:
        return np.arange(self.i_min, self.i_max + 1)

    def __getitem__(self, label: int) -> float:
        if not self.i_min <= label <= self.i_max:
            raise IndexError(f"label {label} outside [{self.i_min}, {self.i_max}]")
        return float(self.heights[label - self.i_min])

    @property
    def total_mass(self) -> float:
        return math.fsum(self.heights)


@dataclass
class PerturbationProfile:
    """Density ``q + n^{-beta} v0(x)`` at macroscopic point ``x = i/n``."""

    q: float
    beta: float
    n: int
    v0: PiecewisePoly = field(default_factory=lambda: constant(0.0))

    def __post_init__(self):
        if self.q <= 0:
            raise ConfigurationError(f"equilibrium density q must be positive, got {self.q}")
        if self.beta <= 0:
            raise ConfigurationError(f"beta must be positive, got {self.beta}")
        if self.n < 1:
            raise ConfigurationError(f"n must be >= 1, got {self.n}")
        if self.v0.degree > 1:
            raise ConfigurationError("v0 must be piecewise linear")
        sup = self.v0.sup_abs()
        if not self.n ** (-self.beta) * sup < self.q:
            raise ConfigurationError(
                f"need q > n^-beta sup|v0|: q={self.q}, n^-beta sup|v0|={self.n ** -self.beta * sup}")
        self.V0 = self.v0.antiderivative(0.0)

    def site_means(self, labels) -> np.ndarray:
        """Exact mean of each initial stick: ``q + n^{1-beta} int_{(i-1)/n}^{i/n} v0``."""
        labels = np.asarray(labels)
        n = self.n
        V0 = self.V0
        incr = V0(labels / n) - V0((labels - 1) / n)
        means = self.q + n ** (1.0 - self.beta) * incr
        if np.any(means <= 0):
            raise ConfigurationError("a site mean is not positive")
        return means


_BLOCK = 1024


def _entropy(seed) -> list[int]:
    if isinstance(seed, np.random.SeedSequence):
        ent = seed.entropy
        return list(ent) if isinstance(ent, (list, tuple)) else [int(ent)]
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    return [int(s) for s in seed]


def unit_exponentials(seed, lo: int, hi: int) -> np.ndarray:
    """Exp(1) variates for labels ``lo..hi``, each one a function of its label.

    Labels are grouped in blocks of 1024 with one keyed stream per block, so
    widening the label range never changes variates already drawn.
    """
    ent = _entropy(seed)
    out = np.empty(hi - lo + 1)
    for block in range(lo // _BLOCK, hi // _BLOCK + 1):
        rng = np.random.default_rng(np.random.SeedSequence(ent + [block + 2 ** 31]))
        draws = rng.standard_exponential(_BLOCK)
        b_lo = max(lo, block * _BLOCK)
        b_hi = min(hi, block * _BLOCK + _BLOCK - 1)
        out[b_lo - lo: b_hi - lo + 1] = draws[b_lo - block * _BLOCK: b_hi - block * _BLOCK + 1]
    return out


def sample_local_equilibrium(profile: PerturbationProfile, labels, seed) -> StickConfig:
    """Independent exponential sticks with the profile's site means.

    ``seed`` is an int, a sequence of ints or a ``SeedSequence``; the stick at
    a label does not depend on which other labels are requested.
    """
    labels = np.arange(labels.start, labels.stop) if isinstance(labels, range) else np.asarray(labels)
    if labels.size == 0 or np.any(np.diff(labels) != 1):
        raise ValueError("labels must be a nonempty contiguous ascending range")
    means = profile.site_means(labels)
    lo, hi = int(labels[0]), int(labels[-1])
    return StickConfig(lo, means * unit_exponentials(seed, lo, hi))


def expected_initial_position(profile: PerturbationProfile, i: int) -> float:
    return profile.q * i + profile.n ** (1.0 - profile.beta) * profile.V0(i / profile.n)


def sticks_to_particles(eta: StickConfig, anchor_label: int = 0,
                        anchor_position: float = 0.0) -> ParticleConfig:
    """Cumulative sums; particles occupy labels ``eta.i_min - 1 .. eta.i_max``."""
    lo = eta.i_min - 1
    if not lo <= anchor_label <= eta.i_max:
        raise IndexError(f"anchor {anchor_label} outside [{lo}, {eta.i_max}]")
    z = np.concatenate([[0.0], np.cumsum(eta.heights)])
    z = z - z[anchor_label - lo] + anchor_position
    return ParticleConfig(lo, z, eta.time_stamp)


def particles_to_sticks(z: ParticleConfig) -> StickConfig:
    if len(z) < 2:
        raise ValueError("need at least two particles to form a stick")
    return StickConfig(z.i_min + 1, np.diff(z.positions), z.time_stamp)


def evolve_sticks_direct(eta0: StickConfig, t: float, seed, closed_right: bool = False) -> StickConfig:
    """Gillespie simulation of the stick generator on a finite window.

    Site ``i`` fires at rate ``eta(i)`` and passes a uniform piece of itself to
    ``i+1``. Nothing enters at ``i_min``. Mass leaving ``i_max`` is lost, unless
    ``closed_right`` is set, in which case the last site never fires and total
    mass is conserved. Simulation runs from ``eta0.time_stamp`` for duration ``t``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    h = eta0.heights.copy()
    rng = np.random.default_rng(seed)
    clock = 0.0
    n_sites = h.size
    while True:
        rates = h[:-1] if closed_right else h
        cum = np.cumsum(rates)
        total = cum[-1] if cum.size else 0.0
        if total <= 0:
            break
        clock += rng.exponential(1.0 / total)
        if clock > t:
            break
        i = int(np.searchsorted(cum, rng.random() * total, side="right"))
        i = min(i, rates.size - 1)
        u = rng.random() * h[i]
        h[i] -= u
        if i + 1 < n_sites:
            h[i + 1] += u
    return StickConfig(eta0.i_min, h, eta0.time_stamp + t)


def write_sticks_csv(path, eta: StickConfig) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "height"])
        for k, v in zip(eta.labels, eta.heights):
            w.writerow([int(k), repr(float(v))])
